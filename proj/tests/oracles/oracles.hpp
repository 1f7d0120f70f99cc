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


// Independent reference computations used as ground truth by the tests. Nothing here
// calls into the library's numerical code.

#ifndef WASSNET_TESTS_ORACLES_HPP_
#define WASSNET_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace wassnet::oracle {

inline double integrate(const std::function<double(double)>& f, double a, double b, unsigned depth = 20,
                        double tol = 1e-14) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, depth, tol);
}

struct Moments {
  double mass, mean, variance;
};

/// Mass, mean and variance of N(mu, var) on [lo, hi] by adaptive quadrature.
inline Moments truncated_moments(double mu, double var, double lo, double hi) {
  const double sd = std::sqrt(var);
  const double a = (lo - mu) / sd;
  const double b = (hi - mu) / sd;
  const double z0 = std::clamp(0.0, a, b);
  // Integrate exp(-(z^2 - z0^2)/2) so deep tails do not underflow. Outside a window of
  // 12 around z0 the integrand is below e^-72 of its peak.
  const double left = std::max(a, z0 - 12.0);
  const double right = std::min(b, z0 + 12.0);
  auto g = [z0](double z) { return std::exp(-0.5 * (z * z - z0 * z0)); };
  const double i0 = integrate(g, left, right, 15, 1e-13);
  const double i1 = integrate([&](double z) { return (z - z0) * g(z); }, left, right, 15, 1e-13);
  const double shift = i1 / i0;
  const double i2 = integrate([&](double z) { return (z - z0 - shift) * (z - z0 - shift) * g(z); }, left, right, 15, 1e-13);
  Moments m;
  m.mass = i0 * std::exp(-0.5 * z0 * z0) / std::sqrt(2.0 * M_PI);
  m.mean = mu + sd * (z0 + shift);
  m.variance = var * (i2 / i0);
  return m;
}

inline double normal_cdf(double x) {
  return integrate([](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }, -40.0, x);
}

/// E[max(Z, 0)] and similar one-dimensional expectations under N(mu, var).
inline double gaussian_expectation(double mu, double var, const std::function<double(double)>& h) {
  const double sd = std::sqrt(var);
  return integrate(
      [&](double z) { return h(mu + sd * z) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }, -40.0,
      40.0);
}

/// 1-D W2^2 between two normals from the quantile coupling: int_0^1 (F^-1(u) - G^-1(u))^2 du.
inline double quantile_coupling_w2sq(double m1, double s1, double m2, double s2) {
  boost::math::normal a(m1, s1);
  boost::math::normal b(m2, s2);
  auto f = [&](double u) {
    const double d = boost::math::quantile(a, u) - boost::math::quantile(b, u);
    return d * d;
  };
  return integrate(f, 1e-15, 1.0 - 1e-15);
}

/// Plain Lloyd iterations on the standard normal with quadrature centroids.
inline std::vector<double> lloyd_quantizer(int n, double tol, int max_iters, double* w2sq) {
  std::vector<double> c(n);
  for (int i = 0; i < n; ++i) c[i] = -2.0 + 4.0 * (i + 0.5) / n;
  auto cell = [&](int i) {
    const double lo = i == 0 ? -std::numeric_limits<double>::infinity() : 0.5 * (c[i - 1] + c[i]);
    const double hi = i == n - 1 ? std::numeric_limits<double>::infinity() : 0.5 * (c[i] + c[i + 1]);
    return std::pair{lo, hi};
  };
  for (int it = 0; it < max_iters; ++it) {
    double move = 0.0;
    std::vector<double> next(n);
    for (int i = 0; i < n; ++i) {
      const auto [lo, hi] = cell(i);
      next[i] = truncated_moments(0.0, 1.0, lo, hi).mean;
      move = std::max(move, std::abs(next[i] - c[i]));
    }
    c = next;
    if (move < tol) break;
  }
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto [lo, hi] = cell(i);
    const Moments m = truncated_moments(0.0, 1.0, lo, hi);
    d += m.mass * (m.variance + (m.mean - c[i]) * (m.mean - c[i]));
  }
  *w2sq = d;
  return c;
}

/// Exact transportation LP optimum by enumerating every spanning tree of the bipartite
/// support graph (the bases of the LP) and keeping the feasible ones.
inline double transport_bruteforce(const Eigen::MatrixXd& cost, const std::vector<double>& a,
                                   const std::vector<double>& b) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  const int nodes = m + n;
  const int need = nodes - 1;
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) edges.emplace_back(i, m + j);
  const int ne = static_cast<int>(edges.size());

  std::vector<int> parent(nodes);
  std::vector<int> chosen;
  double best = std::numeric_limits<double>::infinity();

  auto evaluate = [&]() {
    // Leaf peeling: a leaf's single edge carries its whole residual supply.
    std::vector<double> residual(nodes);
    for (int i = 0; i < m; ++i) residual[i] = a[i];
    for (int j = 0; j < n; ++j) residual[m + j] = b[j];
    std::vector<int> degree(nodes, 0);
    for (int e : chosen) {
      ++degree[edges[e].first];
      ++degree[edges[e].second];
    }
    std::vector<char> used(chosen.size(), 0);
    double total = 0.0;
    for (std::size_t step = 0; step < chosen.size(); ++step) {
      int pick = -1;
      int leaf = -1;
      for (std::size_t k = 0; k < chosen.size() && pick < 0; ++k) {
        if (used[k]) continue;
        const auto [u, v] = edges[chosen[k]];
        if (degree[u] == 1) {
          pick = static_cast<int>(k);
          leaf = u;
        } else if (degree[v] == 1) {
          pick = static_cast<int>(k);
          leaf = v;
        }
      }
      const auto [u, v] = edges[chosen[pick]];
      const int other = leaf == u ? v : u;
      const double flow = residual[leaf];
      if (flow < -1e-12) return;
      residual[other] -= flow;
      residual[leaf] = 0.0;
      --degree[u];
      --degree[v];
      used[pick] = 1;
      total += flow * cost(u, v - m);
    }
    best = std::min(best, total);
  };

  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : find(parent[x]); };
  std::function<void(int)> dfs = [&](int start) {
    if (static_cast<int>(chosen.size()) == need) {
      evaluate();
      return;
    }
    for (int e = start; e < ne; ++e) {
      if (ne - e < need - static_cast<int>(chosen.size())) return;
      const int ru = find(edges[e].first);
      const int rv = find(edges[e].second);
      if (ru == rv) continue;
      parent[ru] = rv;
      chosen.push_back(e);
      dfs(e + 1);
      chosen.pop_back();
      parent[ru] = ru;
    }
  };
  std::iota(parent.begin(), parent.end(), 0);
  dfs(0);
  return best;
}

/// Northwest-corner feasible plan cost (an upper bound on the LP optimum).
inline double northwest_corner_cost(const Eigen::MatrixXd& cost, std::vector<double> a,
                                    std::vector<double> b) {
  std::size_t i = 0;
  std::size_t j = 0;
  double total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double f = std::min(a[i], b[j]);
    total += f * cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    a[i] -= f;
    b[j] -= f;
    if (a[i] <= b[j]) ++i;
    else ++j;
  }
  return total;
}

/// Squared Gaussian W2 via an eigen-based matrix square root (test-side implementation).
inline double gaussian_w2sq(const Eigen::VectorXd& m1, const Eigen::MatrixXd& c1, const Eigen::VectorXd& m2,
                            const Eigen::MatrixXd& c2) {
  auto sqrtm = [](const Eigen::MatrixXd& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    return Eigen::MatrixXd(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                           es.eigenvectors().transpose());
  };
  const Eigen::MatrixXd r = sqrtm(c2);
  const Eigen::MatrixXd inner = r * c1 * r;
  const double cross = sqrtm(0.5 * (inner + inner.transpose())).trace();
  return std::max(0.0, (m1 - m2).squaredNorm() + c1.trace() + c2.trace() - 2.0 * cross);
}

struct MeanSe {
  double mean, se;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace wassnet::oracle

#endif  // WASSNET_TESTS_ORACLES_HPP_
