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

#ifndef WASSNET_TOLERANCES_HPP_
#define WASSNET_TOLERANCES_HPP_

namespace wassnet {

/// Every scalar tolerance used by the library, in one place.
struct Tolerances {
  /// Relative asymmetry allowed in a covariance matrix.
  double symmetry_rel = 1e-12;
  /// Eigenvalues down to -psd_neg_rel * lambda_max are clipped to zero;
  /// anything more negative is rejected.
  double psd_neg_rel = 1e-10;
  /// Axes with lambda <= degeneracy_rel * lambda_max are treated as degenerate.
  double degeneracy_rel = 1e-10;
  /// Allowed deviation of a weight vector's sum from one.
  double simplex_abs = 1e-12;
  /// Truncated-Gaussian cells below this mass are reported as negligible.
  double negligible_mass = 1e-300;
  /// Grid-signature cells below this standard-normal mass are pruned.
  double prune_mass = 1e-12;
  /// Fixed-point tolerance and iteration cap of the optimal 1-D quantizer.
  double quantizer_tol = 1e-12;
  int quantizer_max_iters = 100000;
  /// Allowed imbalance between the two marginals of a transport problem.
  double marginal_abs = 1e-9;
};

inline constexpr Tolerances kTolerances{};

}  // namespace wassnet

#endif  // WASSNET_TOLERANCES_HPP_
