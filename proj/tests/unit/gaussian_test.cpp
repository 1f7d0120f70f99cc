// Copyright 2026 The wassnet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wassnet/error.hpp"
#include "wassnet/gaussian.hpp"

namespace wassnet {
namespace {

Matrix random_spd(int d, Rng& rng, double ridge = 0.1) {
  std::normal_distribution<double> n;
  Matrix a(d, d);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  return a * a.transpose() / d + ridge * Matrix::Identity(d, d);
}

Vector random_vector(int d, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = n(rng);
  return v;
}

TEST(GaussianW2, Identity) {
  const Gaussian g = Gaussian::diagonal(Vector::Zero(1), Vector::Ones(1));
  EXPECT_EQ(gaussian_w2(g, g), 0.0);
}

TEST(GaussianW2, OneDimensionalQuantileCoupling) {
  const Gaussian a = Gaussian::full(Vector::Zero(1), Matrix::Ones(1, 1));
  const Gaussian b = Gaussian::full(Vector::Constant(1, 2.0), Matrix::Constant(1, 1, 4.0));
  EXPECT_NEAR(gaussian_w2(a, b), std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(gaussian_w2_squared(a, b), oracle::quantile_coupling_w2sq(0.0, 1.0, 2.0, 2.0), 1e-8);
}

TEST(GaussianW2, PureMeanShift) {
  const Gaussian a = Gaussian::full(Vector::Zero(2), Matrix::Identity(2, 2));
  Vector m(2);
  m << 3.0, 4.0;
  const Gaussian b = Gaussian::full(m, Matrix::Identity(2, 2));
  EXPECT_NEAR(gaussian_w2(a, b), 5.0, 1e-12);
}

TEST(GaussianW2, MatchesIndependentSquareRoot) {
  Rng rng(3);
  for (int d : {1, 2, 3, 6}) {
    for (int t = 0; t < 10; ++t) {
      const Matrix c1 = random_spd(d, rng), c2 = random_spd(d, rng);
      const Vector m1 = random_vector(d, rng), m2 = random_vector(d, rng);
      EXPECT_NEAR(gaussian_w2_squared(Gaussian::full(m1, c1), Gaussian::full(m2, c2)),
                  oracle::gaussian_w2sq(m1, c1, m2, c2), 1e-9);
    }
  }
}

TEST(GaussianW2, RankDeficientSides) {
  Rng rng(4);
  Vector u = random_vector(3, rng);
  const Matrix c1 = u * u.transpose();
  const Matrix c2 = random_spd(3, rng);
  const Vector m = random_vector(3, rng);
  // Rank one: tr sqrt(c2^1/2 u u' c2^1/2) = sqrt(u' c2 u).
  const double closed = m.squaredNorm() + u.squaredNorm() + c2.trace() - 2.0 * std::sqrt(u.dot(c2 * u));
  EXPECT_NEAR(gaussian_w2_squared(Gaussian::full(m, c1), Gaussian::full(Vector::Zero(3), c2)), closed, 1e-7);
  EXPECT_NEAR(oracle::gaussian_w2sq(m, c1, Vector::Zero(3), c2), closed, 1e-7);
  EXPECT_NEAR(gaussian_w2_squared(Gaussian::dirac(m), Gaussian::full(m, c1)), c1.trace(), 1e-12);
}

TEST(GaussianW2, TriangleInequality) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + t % 4;
    Gaussian g[3];
    for (auto& x : g) x = Gaussian::full(random_vector(d, rng), random_spd(d, rng, 0.0));
    EXPECT_LE(gaussian_w2(g[0], g[2]), gaussian_w2(g[0], g[1]) + gaussian_w2(g[1], g[2]) + 1e-9);
  }
}

TEST(GaussianW2, SecondMomentGapBoundedByW2) {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + t % 4;
    const Gaussian p = Gaussian::full(random_vector(d, rng), random_spd(d, rng, 0.0));
    const Gaussian q = Gaussian::full(random_vector(d, rng), random_spd(d, rng, 0.0));
    const double rp = std::sqrt(p.mean().squaredNorm() + p.trace());
    const double rq = std::sqrt(q.mean().squaredNorm() + q.trace());
    EXPECT_LE(std::abs(rp - rq), gaussian_w2(p, q) + 1e-9);
  }
}

TEST(GaussianW2, DiagonalSplitsOverMarginals) {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int t = 0; t < 20; ++t) {
    Vector va(4), vb(4);
    for (int i = 0; i < 4; ++i) {
      va(i) = u(rng);
      vb(i) = u(rng);
    }
    const Vector ma = random_vector(4, rng), mb = random_vector(4, rng);
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
      sum += oracle::gaussian_w2sq(ma.segment(i, 1), va.segment(i, 1).asDiagonal().toDenseMatrix(),
                                   mb.segment(i, 1), vb.segment(i, 1).asDiagonal().toDenseMatrix());
    }
    EXPECT_NEAR(gaussian_w2_squared(Gaussian::diagonal(ma, va), Gaussian::diagonal(mb, vb)), sum, 1e-10);
    // Same value through the full-matrix route.
    EXPECT_NEAR(gaussian_w2_squared(Gaussian::full(ma, va.asDiagonal().toDenseMatrix()),
                                    Gaussian::diagonal(mb, vb)),
                sum, 1e-10);
  }
}

TEST(MixtureSecondMoment, StandardNormal) {
  EXPECT_DOUBLE_EQ(mixture_second_moment(GaussianMixture(Gaussian::diagonal(Vector::Zero(2), Vector::Ones(2)))), 2.0);
}

TEST(MixtureSecondMoment, TwoDiracs) {
  const GaussianMixture g({0.5, 0.5}, {Gaussian::dirac(Vector::Constant(1, 1.0)),
                                       Gaussian::dirac(Vector::Constant(1, -1.0))});
  EXPECT_DOUBLE_EQ(mixture_second_moment(g), 1.0);
}

TEST(MixtureSecondMoment, MatchesMonteCarlo) {
  Rng rng(8);
  std::vector<Gaussian> comps;
  for (int i = 0; i < 3; ++i) comps.push_back(Gaussian::full(random_vector(2, rng, 2.0), random_spd(2, rng)));
  const GaussianMixture g({0.2, 0.5, 0.3}, comps);
  Rng draw = make_stream(1, 0);
  const Matrix s = g.sample(1'000'000, draw);
  std::vector<double> sq(s.rows());
  for (Eigen::Index i = 0; i < s.rows(); ++i) sq[i] = s.row(i).squaredNorm();
  const auto mc = oracle::mean_se(sq);
  EXPECT_LE(std::abs(mixture_second_moment(g) - mc.mean), 3.0 * mc.se);
}

TEST(SymmetricEig, Identity) {
  const EigenBasis e = symmetric_eig(Matrix::Identity(3, 3));
  EXPECT_EQ(e.rank, 3);
  EXPECT_TRUE(e.eigenvalues.isApprox(Vector::Ones(3)));
}

TEST(SymmetricEig, DiagonalIsSignedPermutation) {
  Matrix c = Matrix::Zero(2, 2);
  c(0, 0) = 1.0;
  c(1, 1) = 4.0;
  const EigenBasis e = symmetric_eig(c);
  EXPECT_DOUBLE_EQ(e.eigenvalues(0), 4.0);
  EXPECT_DOUBLE_EQ(e.eigenvalues(1), 1.0);
  EXPECT_TRUE(e.eigenvectors.cwiseAbs().isApprox((Matrix(2, 2) << 0, 1, 1, 0).finished()));
}

TEST(SymmetricEig, PermutedBlockDiagonal) {
  Rng rng(12);
  const Matrix b1 = random_spd(3, rng), b2 = random_spd(2, rng);
  Matrix a = Matrix::Zero(5, 5);
  const int p1[3] = {0, 2, 4}, p2[2] = {1, 3};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(p1[i], p1[j]) = b1(i, j);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) a(p2[i], p2[j]) = b2(i, j);
  const EigenBasis e = symmetric_eig(a);
  Eigen::SelfAdjointEigenSolver<Matrix> ref(a);
  EXPECT_LT((e.eigenvalues - ref.eigenvalues().reverse()).cwiseAbs().maxCoeff(), 1e-12);
  for (int j = 1; j < 5; ++j) EXPECT_GE(e.eigenvalues(j - 1), e.eigenvalues(j));
  const Matrix back = e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.transpose();
  EXPECT_LT((back - a).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((e.eigenvectors.transpose() * e.eigenvectors - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SymmetricEig, RankOneOuterProduct) {
  Vector u(2);
  u << 1.2, 1.6;  // norm 2
  const EigenBasis e = symmetric_eig(u * u.transpose());
  EXPECT_NEAR(e.eigenvalues(0), 4.0, 1e-14);
  EXPECT_NEAR(e.eigenvalues(1), 0.0, 1e-14);
  EXPECT_EQ(e.rank, 1);
}

TEST(SymmetricEig, RejectsIndefinite) {
  Matrix c(2, 2);
  c << 1.0, 0.0, 0.0, -0.1;
  EXPECT_THROW(symmetric_eig(c), NumericalError);
}

TEST(GaussianConstruction, RejectsAsymmetricCovariance) {
  Matrix c(2, 2);
  c << 1.0, 0.5, 0.4, 1.0;
  EXPECT_THROW(Gaussian::full(Vector::Zero(2), c), InvalidArgument);
}

TEST(GaussianMixtureConstruction, RejectsBadWeights) {
  const Gaussian g = Gaussian::dirac(Vector::Zero(1));
  EXPECT_THROW(GaussianMixture({0.5, 0.6}, {g, g}), InvalidArgument);
  EXPECT_THROW(GaussianMixture({1.0}, {}), InvalidArgument);
  EXPECT_THROW(GaussianMixture({0.5, 0.5}, {g, Gaussian::dirac(Vector::Zero(2))}), InvalidArgument);
}

TEST(GaussianSampling, MatchesMoments) {
  Rng rng(9);
  const Matrix c = random_spd(3, rng);
  const Vector m = random_vector(3, rng);
  const GaussianMixture g(Gaussian::full(m, c));
  Rng draw = make_stream(2, 0);
  const Matrix s = g.sample(200'000, draw);
  const Vector mean = s.colwise().mean();
  const Matrix centered = s.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / (s.rows() - 1.0);
  EXPECT_LT((mean - m).cwiseAbs().maxCoeff(), 0.02);
  EXPECT_LT((cov - c).cwiseAbs().maxCoeff(), 0.03);
}

}  // namespace
}  // namespace wassnet
