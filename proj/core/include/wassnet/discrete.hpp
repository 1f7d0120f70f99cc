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


#ifndef WASSNET_DISCRETE_HPP_
#define WASSNET_DISCRETE_HPP_

#include <vector>

#include "wassnet/gaussian.hpp"

namespace wassnet {

/// Finitely supported distribution. Atoms are the columns of `locations`.
struct DiscreteDistribution {
  Matrix locations;  // dim x size
  std::vector<double> weights;

  DiscreteDistribution() = default;
  DiscreteDistribution(Matrix locs, std::vector<double> w);

  int size() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(locations.rows()); }
  auto atom(int i) const { return locations.col(i); }

  Vector mean() const;
  /// E||x||^2.
  double second_moment() const;
};

}  // namespace wassnet

#endif  // WASSNET_DISCRETE_HPP_
