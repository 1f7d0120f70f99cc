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

#include "wassnet/stats.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "wassnet/error.hpp"
#include "wassnet/tolerances.hpp"

namespace wassnet {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

double std_normal_pdf(double x) {
  if (!std::isfinite(x)) return 0.0;
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) {
  if (std::isnan(x)) return x;
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

double std_normal_sf(double x) {
  if (std::isnan(x)) return x;
  return 0.5 * std::erfc(x * kInvSqrt2);
}

double std_normal_interval_mass(double a, double b) {
  if (!(a < b)) return 0.0;
  if (a >= 0.0) return std_normal_sf(a) - std_normal_sf(b);
  if (b <= 0.0) return std_normal_cdf(b) - std_normal_cdf(a);
  return 1.0 - std_normal_cdf(a) - std_normal_sf(b);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw InvalidArgument("std_normal_quantile: probability outside [0, 1]");
  }
  // Acklam's rational approximation, then one Halley step against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int step = 0; step < 2; ++step) {
    const double err = x < 0.0 ? std_normal_cdf(x) - p : (1.0 - p) - std_normal_sf(x);
    const double u = err * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    if (!std::isfinite(u)) break;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

std::optional<TruncatedMoments1D> try_truncated_moments_1d(double mu, double var,
                                                           Interval cell) {
  if (!(var > 0.0) || !std::isfinite(var) || !std::isfinite(mu)) {
    throw InvalidArgument("truncated_moments_1d: requires finite mu and var > 0");
  }
  if (!(cell.lo < cell.hi)) {
    throw InvalidArgument("truncated_moments_1d: requires lo < hi");
  }
  if (!cell.bounded_below() && !cell.bounded_above()) {
    return TruncatedMoments1D{1.0, mu, var};
  }
  const double sigma = std::sqrt(var);
  const double a = (cell.lo - mu) / sigma;
  const double b = (cell.hi - mu) / sigma;
  const double mass = std_normal_interval_mass(a, b);
  if (!(mass >= kTolerances.negligible_mass)) return std::nullopt;

  const bool fa = std::isfinite(a);
  const bool fb = std::isfinite(b);
  const double pa = fa ? std_normal_pdf(a) : 0.0;
  const double pb = fb ? std_normal_pdf(b) : 0.0;

  // pdf(a) - pdf(b) without cancellation when both ends are finite.
  double pdf_diff;
  if (fa && fb) {
    if (std::abs(a) <= std::abs(b)) {
      pdf_diff = -pa * std::expm1((a - b) * (a + b) * 0.5);
    } else {
      pdf_diff = pb * std::expm1((b - a) * (b + a) * 0.5);
    }
  } else {
    pdf_diff = pa - pb;
  }
  const double apa = fa ? a * pa : 0.0;
  const double bpb = fb ? b * pb : 0.0;

  double m = pdf_diff / mass;
  if (fa) m = std::max(m, a);
  if (fb) m = std::min(m, b);
  double v = 1.0 + (apa - bpb) / mass - m * m;
  if (fa && fb) v = std::min(v, 0.25 * (b - a) * (b - a));
  v = std::max(v, 0.0);
  return TruncatedMoments1D{mass, mu + sigma * m, var * v};
}

TruncatedMoments1D truncated_moments_1d(double mu, double var, Interval cell) {
  auto m = try_truncated_moments_1d(mu, var, cell);
  if (!m) {
    const double sigma = std::sqrt(var);
    const double mass =
        std_normal_interval_mass((cell.lo - mu) / sigma, (cell.hi - mu) / sigma);
    throw NegligibleMassError("truncated_moments_1d: negligible-mass cell [" +
                                  std::to_string(cell.lo) + ", " +
                                  std::to_string(cell.hi) + "]",
                              mass);
  }
  return *m;
}

RectifiedMoments1D rectified_moments_1d(double mu, double var, double lo, double hi) {
  if (!(lo < hi)) throw InvalidArgument("rectified_moments_1d: requires lo < hi");
  const double sigma = std::sqrt(var);
  const double below = std::isfinite(lo) ? std_normal_cdf((lo - mu) / sigma) : 0.0;
  const double above = std::isfinite(hi) ? std_normal_sf((hi - mu) / sigma) : 0.0;
  RectifiedMoments1D out;
  if (below > 0.0) {
    out.first += lo * below;
    out.second += lo * lo * below;
  }
  if (above > 0.0) {
    out.first += hi * above;
    out.second += hi * hi * above;
  }
  if (auto mid = try_truncated_moments_1d(mu, var, {lo, hi})) {
    out.first += mid->mass * mid->mean;
    out.second += mid->mass * (mid->variance + mid->mean * mid->mean);
  }
  return out;
}

}  // namespace wassnet
