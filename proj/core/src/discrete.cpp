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


#include "wassnet/discrete.hpp"

#include "wassnet/error.hpp"

namespace wassnet {

DiscreteDistribution::DiscreteDistribution(Matrix locs, std::vector<double> w)
    : locations(std::move(locs)), weights(std::move(w)) {
  if (weights.empty()) throw InvalidArgument("DiscreteDistribution: no atoms");
  if (locations.cols() != static_cast<Eigen::Index>(weights.size())) {
    throw InvalidArgument("DiscreteDistribution: location/weight count mismatch");
  }
  check_simplex(weights, "DiscreteDistribution");
}

Vector DiscreteDistribution::mean() const {
  Vector m = Vector::Zero(dim());
  for (int i = 0; i < size(); ++i) m += weights[i] * locations.col(i);
  return m;
}

double DiscreteDistribution::second_moment() const {
  double total = 0.0;
  for (int i = 0; i < size(); ++i) total += weights[i] * locations.col(i).squaredNorm();
  return total;
}

}  // namespace wassnet
