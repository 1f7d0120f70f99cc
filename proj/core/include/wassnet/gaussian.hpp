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

#ifndef WASSNET_GAUSSIAN_HPP_
#define WASSNET_GAUSSIAN_HPP_

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "wassnet/tolerances.hpp"

namespace wassnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// Independent, reproducible stream for item `index` of a run seeded by `seed`.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

/// Eigendecomposition of a symmetric PSD matrix, eigenvalues nonincreasing.
struct EigenBasis {
  Vector eigenvalues;  ///< nonincreasing, clipped at zero
  Matrix eigenvectors; ///< columns are orthonormal eigenvectors
  int rank = 0;        ///< eigenvalues above degeneracy_threshold * lambda_max

  /// n x rank matrix V_r diag(sqrt(lambda_r)): maps whitened coordinates back.
  Matrix scaled_basis() const;
};

/// Throws NumericalError when the solver fails or the input is not PSD within tolerance.
EigenBasis symmetric_eig(const Matrix& cov,
                         double degeneracy_threshold = kTolerances.degeneracy_rel);

/// N(mean, cov) with either a full or a diagonal covariance; possibly degenerate.
/// Immutable; the eigendecomposition is computed at most once and shared by copies.
class Gaussian {
 public:
  Gaussian() = default;

  static Gaussian full(Vector mean, Matrix cov);
  static Gaussian diagonal(Vector mean, Vector variances);
  static Gaussian dirac(Vector mean);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  bool is_diagonal() const { return diagonal_; }
  /// Diagonal of the covariance (always available).
  const Vector& variances() const { return variances_; }
  /// Full covariance; materialized for diagonal Gaussians.
  Matrix covariance() const;
  double trace() const { return variances_.sum(); }
  bool is_dirac() const { return variances_.maxCoeff() <= 0.0 && is_diagonal(); }

  const EigenBasis& eigen() const;

  /// Exact equality of parameters (used to short-circuit distances).
  bool same_as(const Gaussian& other) const;

  Vector sample(Rng& rng) const;

 private:
  struct Cache;
  Vector mean_;
  Vector variances_;
  Matrix cov_;  // empty when diagonal_
  bool diagonal_ = true;
  std::shared_ptr<Cache> cache_;
};

class GaussianMixture {
 public:
  GaussianMixture() = default;
  GaussianMixture(std::vector<double> weights, std::vector<Gaussian> components);
  explicit GaussianMixture(Gaussian single);

  int size() const { return static_cast<int>(components_.size()); }
  int dim() const { return components_.front().dim(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Gaussian>& components() const { return components_; }
  double weight(int i) const { return weights_[i]; }
  const Gaussian& component(int i) const { return components_[i]; }

  Vector mean() const;
  Matrix covariance() const;

  Vector sample(Rng& rng) const;
  /// n x dim matrix of i.i.d. draws.
  Matrix sample(int n, Rng& rng) const;

 private:
  std::vector<double> weights_;
  std::vector<Gaussian> components_;
};

/// Closed-form 2-Wasserstein distance between two Gaussians.
double gaussian_w2(const Gaussian& a, const Gaussian& b);
double gaussian_w2_squared(const Gaussian& a, const Gaussian& b);

/// E||x||^2 under the mixture.
double mixture_second_moment(const GaussianMixture& g);

/// Throws InvalidArgument unless `w` lies on the simplex within kTolerances.simplex_abs.
void check_simplex(const std::vector<double>& w, const char* what);

}  // namespace wassnet

#endif  // WASSNET_GAUSSIAN_HPP_
