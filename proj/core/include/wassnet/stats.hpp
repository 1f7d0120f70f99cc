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

#ifndef WASSNET_STATS_HPP_
#define WASSNET_STATS_HPP_

#include <limits>
#include <optional>

namespace wassnet {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval on the extended real line. Unbounded sides hold +-infinity.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  static constexpr Interval whole() { return {-kInf, kInf}; }
  bool bounded_below() const { return lo > -kInf; }
  bool bounded_above() const { return hi < kInf; }
  bool operator==(const Interval&) const = default;
};

/// Probability, mean and variance of N(mu, var) restricted to an interval.
struct TruncatedMoments1D {
  double mass = 1.0;
  double mean = 0.0;
  double variance = 1.0;
};

double std_normal_pdf(double x);

/// Phi(x). Uses erfc on the tail side so that both tails keep full relative precision.
double std_normal_cdf(double x);

/// 1 - Phi(x), accurate for large x.
double std_normal_sf(double x);

/// Phi(b) - Phi(a) for a <= b, computed on whichever side avoids cancellation.
double std_normal_interval_mass(double a, double b);

/// Inverse of Phi; accurate to a few ulps in (1e-300, 1 - 1e-16).
double std_normal_quantile(double p);

/// Moments of N(mu, var) conditioned on [cell.lo, cell.hi].
/// Throws NegligibleMassError when the cell mass is below the representable floor.
TruncatedMoments1D truncated_moments_1d(double mu, double var, Interval cell);

/// Same as truncated_moments_1d but returns nullopt for negligible cells.
std::optional<TruncatedMoments1D> try_truncated_moments_1d(double mu, double var, Interval cell);

struct RectifiedMoments1D {
  double first = 0.0;
  double second = 0.0;
};

/// First and second moments of min(max(Z, lo), hi) for Z ~ N(mu, var).
RectifiedMoments1D rectified_moments_1d(double mu, double var, double lo, double hi);

}  // namespace wassnet

#endif  // WASSNET_STATS_HPP_
