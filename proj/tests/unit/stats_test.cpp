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
#include "wassnet/stats.hpp"

namespace wassnet {
namespace {

TEST(NormalCdf, Symmetry) { EXPECT_DOUBLE_EQ(std_normal_cdf(0.0), 0.5); }

TEST(NormalCdf, Saturates) { EXPECT_EQ(std_normal_cdf(40.0), 1.0); }

TEST(NormalCdf, MatchesQuadrature) {
  for (double x : {-8.0, -3.0, -1.0, 0.3, 1.0, 2.5}) {
    EXPECT_NEAR(std_normal_cdf(x), oracle::normal_cdf(x), 1e-14) << x;
  }
  EXPECT_NEAR(std_normal_cdf(1.0), 0.8413447460685429, 1e-15);
}

TEST(NormalCdf, TailsKeepRelativePrecision) {
  const double q = oracle::integrate([](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); },
                                     -60.0, -20.0);
  EXPECT_NEAR(std_normal_cdf(-20.0) / q, 1.0, 1e-12);
  EXPECT_NEAR(std_normal_sf(20.0) / q, 1.0, 1e-12);
}

TEST(NormalQuantile, InvertsCdf) {
  for (double p : {1e-300, 1e-20, 1e-5, 0.1, 0.5, 0.77, 1.0 - 1e-9}) {
    EXPECT_NEAR(std_normal_cdf(std_normal_quantile(p)) / p, 1.0, 1e-12) << p;
  }
}

TEST(TruncatedMoments, WholeLine) {
  const auto m = truncated_moments_1d(0.0, 1.0, Interval::whole());
  EXPECT_DOUBLE_EQ(m.mass, 1.0);
  EXPECT_DOUBLE_EQ(m.mean, 0.0);
  EXPECT_DOUBLE_EQ(m.variance, 1.0);
}

TEST(TruncatedMoments, PositiveHalfLine) {
  const auto m = truncated_moments_1d(0.0, 1.0, {0.0, kInf});
  const auto o = oracle::truncated_moments(0.0, 1.0, 0.0, kInf);
  EXPECT_NEAR(m.mass, o.mass, 1e-12);
  EXPECT_NEAR(m.mean, o.mean, 1e-12);
  EXPECT_NEAR(m.variance, o.variance, 1e-12);
  EXPECT_NEAR(m.mean, 0.797885, 1e-6);
  EXPECT_NEAR(m.variance, 0.363380, 1e-6);
}

TEST(TruncatedMoments, BoundedCell) {
  const auto m = truncated_moments_1d(2.0, 4.0, {1.0, 3.0});
  const auto o = oracle::truncated_moments(2.0, 4.0, 1.0, 3.0);
  EXPECT_NEAR(m.mass, o.mass, 1e-10);
  EXPECT_NEAR(m.mean, o.mean, 1e-10);
  EXPECT_NEAR(m.variance, o.variance, 1e-10);
}

TEST(TruncatedMoments, DeepTailCells) {
  for (double lo : {8.0, 15.0, 30.0}) {
    const auto m = truncated_moments_1d(0.0, 1.0, {lo, kInf});
    const auto o = oracle::truncated_moments(0.0, 1.0, lo, kInf);
    EXPECT_NEAR(m.mean, o.mean, 1e-9 * lo) << lo;
    EXPECT_NEAR(m.variance, o.variance, 1e-9) << lo;
    EXPECT_NEAR(m.mass / o.mass, 1.0, 1e-9) << lo;
  }
}

TEST(TruncatedMoments, NegligibleMassIsReported) {
  EXPECT_THROW(truncated_moments_1d(0.0, 1.0, {60.0, kInf}), NegligibleMassError);
  EXPECT_FALSE(try_truncated_moments_1d(0.0, 1.0, {60.0, kInf}).has_value());
}

TEST(TruncatedMoments, LawOfTotalExpectation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double mu = u(rng);
    const double var = 0.1 + std::abs(u(rng));
    std::vector<double> cuts{-kInf};
    for (int k = 0; k < 4; ++k) cuts.push_back(u(rng));
    std::sort(cuts.begin() + 1, cuts.end());
    cuts.push_back(kInf);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      if (auto m = try_truncated_moments_1d(mu, var, {cuts[k], cuts[k + 1]})) total += m->mass * m->mean;
    }
    EXPECT_NEAR(total, mu, 1e-9);
  }
}

TEST(RectifiedMoments, InactiveClip) {
  const auto r = rectified_moments_1d(0.0, 1.0, -1e6, 1e6);
  EXPECT_NEAR(r.first, 0.0, 1e-9);
  EXPECT_NEAR(r.second, 1.0, 1e-9);
}

TEST(RectifiedMoments, ReluMean) {
  const auto r = rectified_moments_1d(0.0, 1.0, 0.0, 1e6);
  const double q = oracle::gaussian_expectation(0.0, 1.0, [](double x) { return std::max(x, 0.0); });
  EXPECT_NEAR(r.first, q, 1e-12);
  EXPECT_NEAR(r.first, 0.398942, 1e-6);
}

TEST(RectifiedMoments, MatchesMonteCarlo) {
  const auto r = rectified_moments_1d(1.0, 1.0, 0.0, 2.0);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(1.0, 1.0);
  std::vector<double> first, second;
  for (int i = 0; i < 1'000'000; ++i) {
    const double y = std::clamp(n(rng), 0.0, 2.0);
    first.push_back(y);
    second.push_back(y * y);
  }
  const auto m1 = oracle::mean_se(first);
  const auto m2 = oracle::mean_se(second);
  EXPECT_LE(std::abs(r.first - m1.mean), 3.0 * m1.se);
  EXPECT_LE(std::abs(r.second - m2.mean), 3.0 * m2.se);
}

}  // namespace
}  // namespace wassnet
