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

#include "wassnet/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "wassnet/error.hpp"

namespace wassnet {

Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return Rng(seq);
}

Matrix EigenBasis::scaled_basis() const {
  Matrix s = eigenvectors.leftCols(rank);
  for (int j = 0; j < rank; ++j) s.col(j) *= std::sqrt(eigenvalues[j]);
  return s;
}

namespace {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void check_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw InvalidArgument(std::string(what) + ": matrix is not square");
  const double scale = max_abs(m);
  const double asym = max_abs(m - m.transpose());
  if (asym > kTolerances.symmetry_rel * scale) {
    throw InvalidArgument(std::string(what) + ": matrix is not symmetric");
  }
}

EigenBasis finish_basis(Vector values, Matrix vectors, double threshold, const Matrix* source) {
  const double lmax = values.size() ? std::max(values[0], 0.0) : 0.0;
  const double floor = -kTolerances.psd_neg_rel * lmax;
  for (int i = 0; i < values.size(); ++i) {
    if (values[i] < floor && values[i] < -1e-300) {
      if (source) throw NumericalError("matrix is not positive semidefinite", *source);
      throw NumericalError("matrix is not positive semidefinite");
    }
    values[i] = std::max(values[i], 0.0);
  }
  int rank = 0;
  if (lmax > 0.0) {
    while (rank < values.size() && values[rank] > threshold * lmax) ++rank;
  }
  return EigenBasis{std::move(values), std::move(vectors), rank};
}

EigenBasis diagonal_basis(const Vector& variances, double threshold) {
  const int n = static_cast<int>(variances.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return variances[a] > variances[b]; });
  Vector values(n);
  Matrix vectors = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    values[j] = variances[order[j]];
    vectors(order[j], j) = 1.0;
  }
  return finish_basis(std::move(values), std::move(vectors), threshold, nullptr);
}

}  // namespace

namespace {

// Ascending eigenpairs of one symmetric block.
void solve_block(const Matrix& a, const Matrix& source, Vector& values, Matrix& vectors) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() == Eigen::Success) {
    values = solver.eigenvalues();
    vectors = solver.eigenvectors();
    return;
  }
  // The tridiagonal QL sweep can stall on tightly clustered spectra. The singular
  // vectors of a symmetric matrix are eigenvectors; Rayleigh quotients restore signs.
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU);
  if (svd.info() != Eigen::Success) throw NumericalError("symmetric_eig: eigen-solver did not converge", source);
  const Matrix u = svd.matrixU();
  const Vector q = (u.transpose() * a * u).diagonal();
  std::vector<int> order(q.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return q[x] < q[y]; });
  values.resize(q.size());
  vectors.resize(u.rows(), u.cols());
  for (std::size_t j = 0; j < order.size(); ++j) {
    values[j] = q[order[j]];
    vectors.col(j) = u.col(order[j]);
  }
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace

EigenBasis symmetric_eig(const Matrix& cov, double degeneracy_threshold) {
  check_symmetric(cov, "symmetric_eig");
  const int n = static_cast<int>(cov.rows());
  if (n == 0) return EigenBasis{};

  // Independent coordinate groups (e.g. output neurons of a layer) decouple the problem.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (int j = 0; j < n; ++j) {
    for (int i = j + 1; i < n; ++i) {
      if (cov(i, j) != 0.0) parent[find_root(parent, i)] = find_root(parent, j);
    }
  }
  std::vector<std::vector<int>> groups(n);
  for (int i = 0; i < n; ++i) groups[find_root(parent, i)].push_back(i);
  std::erase_if(groups, [](const std::vector<int>& g) { return g.empty(); });

  if (groups.size() == 1) {
    Vector values;
    Matrix vectors;
    solve_block(cov, cov, values, vectors);
    return finish_basis(values.reverse(), vectors.rowwise().reverse(), degeneracy_threshold, &cov);
  }

  std::vector<double> all_values;
  std::vector<std::pair<int, Vector>> parts;  // (group index, eigenvector within the group)
  all_values.reserve(n);
  parts.reserve(n);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::vector<int>& idx = groups[g];
    const int k = static_cast<int>(idx.size());
    Matrix block(k, k);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) block(a, b) = cov(idx[a], idx[b]);
    }
    Vector values;
    Matrix vectors;
    solve_block(block, cov, values, vectors);
    for (int j = 0; j < k; ++j) {
      all_values.push_back(values[j]);
      parts.emplace_back(static_cast<int>(g), vectors.col(j));
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return all_values[a] > all_values[b]; });
  Vector values(n);
  Matrix vectors = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    values[j] = all_values[order[j]];
    const auto& [g, v] = parts[order[j]];
    for (std::size_t a = 0; a < groups[g].size(); ++a) vectors(groups[g][a], j) = v[a];
  }
  return finish_basis(std::move(values), std::move(vectors), degeneracy_threshold, &cov);
}

struct Gaussian::Cache {
  std::once_flag once;
  EigenBasis basis;
  Matrix scaled;
};

Gaussian Gaussian::full(Vector mean, Matrix cov) {
  if (cov.rows() != mean.size()) throw InvalidArgument("Gaussian: mean/covariance size mismatch");
  check_symmetric(cov, "Gaussian");
  Gaussian g;
  g.cov_ = 0.5 * (cov + cov.transpose());
  g.variances_ = g.cov_.diagonal().cwiseMax(0.0);
  g.mean_ = std::move(mean);
  g.diagonal_ = false;
  g.cache_ = std::make_shared<Cache>();
  return g;
}

Gaussian Gaussian::diagonal(Vector mean, Vector variances) {
  if (variances.size() != mean.size()) {
    throw InvalidArgument("Gaussian: mean/variance size mismatch");
  }
  const double scale = variances.size() ? variances.cwiseAbs().maxCoeff() : 0.0;
  for (int i = 0; i < variances.size(); ++i) {
    if (!(variances[i] >= -kTolerances.psd_neg_rel * scale)) {
      throw InvalidArgument("Gaussian: negative variance");
    }
  }
  Gaussian g;
  g.mean_ = std::move(mean);
  g.variances_ = variances.cwiseMax(0.0);
  g.diagonal_ = true;
  g.cache_ = std::make_shared<Cache>();
  return g;
}

Gaussian Gaussian::dirac(Vector mean) {
  Vector zeros = Vector::Zero(mean.size());
  return diagonal(std::move(mean), std::move(zeros));
}

Matrix Gaussian::covariance() const {
  if (diagonal_) return variances_.asDiagonal();
  return cov_;
}

const EigenBasis& Gaussian::eigen() const {
  std::call_once(cache_->once, [this] {
    cache_->basis = diagonal_ ? diagonal_basis(variances_, kTolerances.degeneracy_rel)
                              : symmetric_eig(cov_);
    cache_->scaled = cache_->basis.scaled_basis();
  });
  return cache_->basis;
}

bool Gaussian::same_as(const Gaussian& other) const {
  if (cache_ && cache_ == other.cache_) return true;
  if (dim() != other.dim() || diagonal_ != other.diagonal_) return false;
  if (mean_ != other.mean_ || variances_ != other.variances_) return false;
  return diagonal_ || cov_ == other.cov_;
}

Vector Gaussian::sample(Rng& rng) const {
  std::normal_distribution<double> normal;
  if (diagonal_) {
    Vector x(dim());
    for (int i = 0; i < dim(); ++i) x[i] = mean_[i] + std::sqrt(variances_[i]) * normal(rng);
    return x;
  }
  eigen();
  const Matrix& s = cache_->scaled;
  Vector xi(s.cols());
  for (int j = 0; j < xi.size(); ++j) xi[j] = normal(rng);
  return mean_ + s * xi;
}

void check_simplex(const std::vector<double>& w, const char* what) {
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InvalidArgument(std::string(what) + ": weights must be finite and nonnegative");
    }
    sum += x;
  }
  const double slack = std::max(kTolerances.simplex_abs, 1e-15 * static_cast<double>(w.size()));
  if (std::abs(sum - 1.0) > slack) {
    throw InvalidArgument(std::string(what) + ": weights do not sum to one");
  }
}

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Gaussian> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty()) throw InvalidArgument("GaussianMixture: no components");
  if (weights_.size() != components_.size()) {
    throw InvalidArgument("GaussianMixture: weight/component count mismatch");
  }
  check_simplex(weights_, "GaussianMixture");
  const int n = components_.front().dim();
  for (const auto& c : components_) {
    if (c.dim() != n) throw InvalidArgument("GaussianMixture: components differ in dimension");
  }
}

GaussianMixture::GaussianMixture(Gaussian single)
    : GaussianMixture(std::vector<double>{1.0}, std::vector<Gaussian>{std::move(single)}) {}

Vector GaussianMixture::mean() const {
  Vector m = Vector::Zero(dim());
  for (int i = 0; i < size(); ++i) m += weights_[i] * components_[i].mean();
  return m;
}

Matrix GaussianMixture::covariance() const {
  const Vector m = mean();
  Matrix c = Matrix::Zero(dim(), dim());
  for (int i = 0; i < size(); ++i) {
    if (weights_[i] == 0.0) continue;
    const Vector d = components_[i].mean() - m;
    if (components_[i].is_diagonal()) {
      c.diagonal() += weights_[i] * components_[i].variances();
    } else {
      c += weights_[i] * components_[i].covariance();
    }
    c.noalias() += weights_[i] * d * d.transpose();
  }
  return c;
}

Vector GaussianMixture::sample(Rng& rng) const {
  std::discrete_distribution<int> pick(weights_.begin(), weights_.end());
  return components_[pick(rng)].sample(rng);
}

Matrix GaussianMixture::sample(int n, Rng& rng) const {
  std::discrete_distribution<int> pick(weights_.begin(), weights_.end());
  Matrix out(n, dim());
  for (int s = 0; s < n; ++s) out.row(s) = components_[pick(rng)].sample(rng).transpose();
  return out;
}

double gaussian_w2_squared(const Gaussian& a, const Gaussian& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("gaussian_w2: dimension mismatch");
  if (a.same_as(b)) return 0.0;
  const double mean_term = (a.mean() - b.mean()).squaredNorm();
  if (a.is_diagonal() && b.is_diagonal()) {
    const double cov_term =
        (a.variances().cwiseSqrt() - b.variances().cwiseSqrt()).squaredNorm();
    return mean_term + cov_term;
  }
  // tr((A^1/2 B A^1/2)^1/2) on the range of A, with A the lower-rank side.
  const Gaussian* lhs = &a;
  const Gaussian* rhs = &b;
  if (b.is_diagonal() || (!a.is_diagonal() && b.eigen().rank < a.eigen().rank)) {
    std::swap(lhs, rhs);
  }
  const Matrix s = lhs->eigen().scaled_basis();
  double cross = 0.0;
  if (s.cols() > 0) {
    Matrix k;
    if (rhs->is_diagonal()) {
      k = s.transpose() * rhs->variances().asDiagonal() * s;
    } else {
      k = s.transpose() * rhs->covariance() * s;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(k, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      throw NumericalError("gaussian_w2: matrix square root failed", k);
    }
    for (int i = 0; i < solver.eigenvalues().size(); ++i) {
      cross += std::sqrt(std::max(solver.eigenvalues()[i], 0.0));
    }
  }
  const double traces = a.trace() + b.trace();
  double cov_term = traces - 2.0 * cross;
  if (cov_term < 1e-12 * traces) cov_term = 0.0;
  return mean_term + cov_term;
}

double gaussian_w2(const Gaussian& a, const Gaussian& b) {
  return std::sqrt(gaussian_w2_squared(a, b));
}

double mixture_second_moment(const GaussianMixture& g) {
  double total = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    total += g.weight(i) * (g.component(i).mean().squaredNorm() + g.component(i).trace());
  }
  return total;
}

}  // namespace wassnet
