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


#ifndef WASSNET_MIXTURE_OPS_HPP_
#define WASSNET_MIXTURE_OPS_HPP_

#include <cstdint>
#include <vector>

#include "wassnet/discrete.hpp"
#include "wassnet/gaussian.hpp"

namespace wassnet {

struct CompressionResult {
  GaussianMixture compressed;
  double w2_bound = 0.0;                // MW2(input, compressed)
  std::vector<int> cluster_assignment;  // input component -> output component (-1: dropped)
};

/// Moment-matched Gaussian of the sub-mixture given by `members` (weights renormalized).
Gaussian moment_match(const GaussianMixture& g, const std::vector<int>& members);

/// Reduces g to at most M components: weighted k-means++ seeding from `seed`, Lloyd
/// iterations on the component means, then per-cluster moment matching.
CompressionResult compress_gmm(const GaussianMixture& g, int M, std::uint64_t seed);

/// Law of b (.) x for x ~ base and a keep mask b ~ Bernoulli(theta)^units, where the
/// atom dimension is blocks * units and the same mask applies to every block.
/// Throws CapacityError when the support would exceed `support_cap`.
DiscreteDistribution expand_dropout(const DiscreteDistribution& base, double theta,
                                    long long support_cap, int blocks = 1);

struct DropoutCompression {
  DiscreteDistribution compressed;
  double w2_bound = 0.0;
  std::vector<int> active_units;  // units that keep their mask randomness
};

/// Keeps mask randomness only on the log2(M) units with the largest
/// sum_j pi_j sum_blocks c_{j,u}^2 and forces the others to be kept.
/// w2_bound = sqrt((1 - theta) * sum_j pi_j * sum_{u not active} sum_blocks c_{j,u}^2).
DropoutCompression compress_dropout(const DiscreteDistribution& base, double theta, long long M,
                                    int blocks = 1);

}  // namespace wassnet

#endif  // WASSNET_MIXTURE_OPS_HPP_
