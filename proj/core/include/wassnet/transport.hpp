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


#ifndef WASSNET_TRANSPORT_HPP_
#define WASSNET_TRANSPORT_HPP_

#include <vector>

#include "wassnet/discrete.hpp"
#include "wassnet/gaussian.hpp"

namespace wassnet {

struct TransportPlan {
  Matrix plan;  // rows: source atoms, columns: target atoms
  double cost = 0.0;
};

/// Exact transportation LP by the primal network simplex method.
/// Zero-mass atoms are excluded from the solve and come back as zero rows/columns.
TransportPlan solve_discrete_ot(const Matrix& cost, const std::vector<double>& a,
                                const std::vector<double>& b);

/// Minimum-cost perfect matching of a square cost matrix; result[i] is the column of row i.
std::vector<int> solve_assignment(const Matrix& cost);

/// Pairwise squared Gaussian W2 between components.
Matrix mixture_cost_matrix(const GaussianMixture& p, const GaussianMixture& q);

struct Mw2Result {
  double distance = 0.0;
  TransportPlan plan;
};

Mw2Result mw2(const GaussianMixture& p, const GaussianMixture& q);

inline constexpr long long kDefaultMaxCostEntries = 4'000'000;

struct EmpiricalW2 {
  double value = 0.0;                 // W2 between the uniform empirical measures
  std::vector<double> matched_costs;  // per-sample squared distance (equal sizes only)

  /// Delta-method standard error of `value` from the spread of matched costs.
  double standard_error() const;
};

/// Samples are rows. Equal sizes use an exact assignment solver with costs computed on
/// the fly; unequal sizes use the network simplex.
EmpiricalW2 empirical_w2_detailed(const Matrix& xs, const Matrix& ys,
                                  long long max_cost_entries = kDefaultMaxCostEntries);

double empirical_w2(const Matrix& xs, const Matrix& ys,
                    long long max_cost_entries = kDefaultMaxCostEntries);

/// W2 between two discrete distributions (exact LP on the full supports).
double discrete_w2(const DiscreteDistribution& p, const DiscreteDistribution& q);

/// w2_value / sqrt(E_reference ||z||^2).
double relative_w2(double w2_value, const GaussianMixture& reference);

}  // namespace wassnet

#endif  // WASSNET_TRANSPORT_HPP_
