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


#include "wassnet/mixture_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "wassnet/error.hpp"
#include "wassnet/transport.hpp"

namespace wassnet {

Gaussian moment_match(const GaussianMixture& g, const std::vector<int>& members) {
  if (members.empty()) throw InvalidArgument("moment_match: empty member list");
  if (members.size() == 1) return g.component(members.front());
  const int n = g.dim();
  double total = 0.0;
  Vector mean = Vector::Zero(n);
  bool all_diagonal = true;
  for (int i : members) {
    total += g.weight(i);
    mean += g.weight(i) * g.component(i).mean();
    all_diagonal = all_diagonal && g.component(i).is_diagonal();
  }
  if (!(total > 0.0)) throw InvalidArgument("moment_match: members carry no mass");
  mean /= total;
  Matrix cov = Matrix::Zero(n, n);
  for (int i : members) {
    const double w = g.weight(i) / total;
    const Gaussian& c = g.component(i);
    if (c.is_diagonal()) {
      cov.diagonal() += w * c.variances();
    } else {
      cov += w * c.covariance();
    }
    const Vector d = c.mean() - mean;
    cov.noalias() += w * d * d.transpose();
  }
  if (all_diagonal) {
    const Matrix off = cov - Matrix(cov.diagonal().asDiagonal());
    if ((off.array() == 0.0).all()) return Gaussian::diagonal(mean, cov.diagonal());
  }
  return Gaussian::full(std::move(mean), std::move(cov));
}

namespace {

constexpr int kMaxLloydIterations = 200;

std::vector<int> nearest_centers(const std::vector<Vector>& points, const std::vector<Vector>& centers) {
  std::vector<int> assign(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = (points[p] - centers[c]).squaredNorm();
      if (d < best) {
        best = d;
        assign[p] = static_cast<int>(c);
      }
    }
  }
  return assign;
}

}  // namespace

CompressionResult compress_gmm(const GaussianMixture& g, int M, std::uint64_t seed) {
  if (M < 1) throw InvalidArgument("compress_gmm: M must be at least 1");
  CompressionResult out;
  const int k = g.size();
  if (k <= M) {
    out.compressed = g;
    out.cluster_assignment.resize(k);
    std::iota(out.cluster_assignment.begin(), out.cluster_assignment.end(), 0);
    return out;
  }
  std::vector<int> live;
  for (int i = 0; i < k; ++i) {
    if (g.weight(i) > 0.0) live.push_back(i);
  }
  out.cluster_assignment.assign(k, -1);
  if (static_cast<int>(live.size()) <= M) {
    std::vector<double> w;
    std::vector<Gaussian> comps;
    for (std::size_t c = 0; c < live.size(); ++c) {
      w.push_back(g.weight(live[c]));
      comps.push_back(g.component(live[c]));
      out.cluster_assignment[live[c]] = static_cast<int>(c);
    }
    out.compressed = GaussianMixture(std::move(w), std::move(comps));
    return out;
  }

  const int n_live = static_cast<int>(live.size());
  std::vector<Vector> points(n_live);
  std::vector<double> mass(n_live);
  for (int p = 0; p < n_live; ++p) {
    points[p] = g.component(live[p]).mean();
    mass[p] = g.weight(live[p]);
  }

  // Weighted k-means++ seeding.
  Rng rng = make_stream(seed, 0);
  std::vector<Vector> centers;
  {
    std::discrete_distribution<int> first(mass.begin(), mass.end());
    centers.push_back(points[first(rng)]);
    std::vector<double> d2(n_live, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < M) {
      std::vector<double> score(n_live);
      double total = 0.0;
      for (int p = 0; p < n_live; ++p) {
        d2[p] = std::min(d2[p], (points[p] - centers.back()).squaredNorm());
        score[p] = mass[p] * d2[p];
        total += score[p];
      }
      if (!(total > 0.0)) break;  // fewer distinct means than M
      std::discrete_distribution<int> next(score.begin(), score.end());
      centers.push_back(points[next(rng)]);
    }
  }

  // Lloyd iterations.
  const int m = static_cast<int>(centers.size());
  std::vector<int> assign = nearest_centers(points, centers);
  for (int it = 0; it < kMaxLloydIterations; ++it) {
    std::vector<Vector> sums(m, Vector::Zero(g.dim()));
    std::vector<double> weight(m, 0.0);
    for (int p = 0; p < n_live; ++p) {
      sums[assign[p]] += mass[p] * points[p];
      weight[assign[p]] += mass[p];
    }
    std::vector<char> taken(n_live, 0);
    for (int c = 0; c < m; ++c) {
      if (weight[c] > 0.0) {
        centers[c] = sums[c] / weight[c];
        continue;
      }
      // Empty cluster: move its centroid to the component mean farthest from its own centroid.
      int far = -1;
      double far_d = -1.0;
      for (int p = 0; p < n_live; ++p) {
        if (taken[p]) continue;
        const double d = (points[p] - centers[assign[p]]).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = p;
        }
      }
      if (far >= 0) {
        taken[far] = 1;
        centers[c] = points[far];
      }
    }
    std::vector<int> next = nearest_centers(points, centers);
    if (next == assign) break;
    assign = std::move(next);
  }

  std::vector<std::vector<int>> members(m);
  for (int p = 0; p < n_live; ++p) members[assign[p]].push_back(live[p]);
  std::vector<double> w;
  std::vector<Gaussian> comps;
  for (int c = 0; c < m; ++c) {
    if (members[c].empty()) continue;
    double cw = 0.0;
    for (int i : members[c]) {
      cw += g.weight(i);
      out.cluster_assignment[i] = static_cast<int>(comps.size());
    }
    w.push_back(cw);
    comps.push_back(moment_match(g, members[c]));
  }
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= wsum;
  out.compressed = GaussianMixture(std::move(w), std::move(comps));
  out.w2_bound = mw2(g, out.compressed).distance;
  return out;
}

namespace {

void check_dropout_args(const DiscreteDistribution& base, double theta, int blocks) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw InvalidArgument("dropout: keep probability must lie in [0, 1]");
  }
  if (blocks < 1 || base.dim() % blocks != 0) {
    throw InvalidArgument("dropout: atom dimension is not a multiple of the block count");
  }
}

// Expands each atom over the keep masks of the units flagged in `random_unit`.
// Units whose coordinates are all zero for an atom do not split it.
DiscreteDistribution mask_expand(const DiscreteDistribution& base, double theta,
                                 const std::vector<char>& random_unit, int blocks,
                                 long long support_cap) {
  const int dim = base.dim();
  const int units = dim / blocks;
  const bool split = theta > 0.0 && theta < 1.0;

  std::vector<std::vector<int>> relevant(base.size());
  long long support = 0;
  for (int a = 0; a < base.size(); ++a) {
    if (base.weights[a] <= 0.0) continue;
    if (split) {
      for (int u = 0; u < units; ++u) {
        if (!random_unit[u]) continue;
        bool nonzero = false;
        for (int b = 0; b < blocks && !nonzero; ++b) nonzero = base.locations(b * units + u, a) != 0.0;
        if (nonzero) relevant[a].push_back(u);
      }
    }
    if (relevant[a].size() >= 62) {
      throw CapacityError("expand_dropout: support overflow; use compress_dropout");
    }
    support += 1LL << relevant[a].size();
    if (support > support_cap) {
      throw CapacityError("expand_dropout: support of " + std::to_string(support) +
                          "+ atoms exceeds the cap of " + std::to_string(support_cap) +
                          "; use compress_dropout");
    }
  }

  Matrix locs(dim, support);
  std::vector<double> weights;
  weights.reserve(support);
  Eigen::Index col = 0;
  for (int a = 0; a < base.size(); ++a) {
    if (base.weights[a] <= 0.0) continue;
    Vector c = base.atom(a);
    if (theta == 0.0) {
      for (int u = 0; u < units; ++u) {
        if (!random_unit[u]) continue;
        for (int b = 0; b < blocks; ++b) c[b * units + u] = 0.0;
      }
    }
    const std::vector<int>& rel = relevant[a];
    const int k = static_cast<int>(rel.size());
    for (long long mask = 0; mask < (1LL << k); ++mask) {
      Vector x = c;
      int kept = 0;
      for (int t = 0; t < k; ++t) {
        if (mask & (1LL << t)) {
          ++kept;
        } else {
          for (int b = 0; b < blocks; ++b) x[b * units + rel[t]] = 0.0;
        }
      }
      locs.col(col++) = x;
      weights.push_back(base.weights[a] * std::pow(theta, kept) * std::pow(1.0 - theta, k - kept));
    }
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;

  // Identical atoms (e.g. theta = 0) are merged so the support is minimal.
  std::vector<int> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    for (int r = 0; r < dim; ++r) {
      if (locs(r, i) != locs(r, j)) return locs(r, i) < locs(r, j);
    }
    return i < j;
  });
  std::vector<int> keep;
  std::vector<double> merged;
  for (int idx : order) {
    if (!keep.empty() && locs.col(keep.back()) == locs.col(idx)) {
      merged.back() += weights[idx];
    } else {
      keep.push_back(idx);
      merged.push_back(weights[idx]);
    }
  }
  if (keep.size() == weights.size()) return DiscreteDistribution(std::move(locs), std::move(weights));
  // Restore first-occurrence order for deterministic output.
  std::vector<int> rank(keep.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::sort(rank.begin(), rank.end(), [&](int a, int b) { return keep[a] < keep[b]; });
  Matrix out_locs(dim, static_cast<Eigen::Index>(keep.size()));
  std::vector<double> out_w(keep.size());
  for (std::size_t r = 0; r < rank.size(); ++r) {
    out_locs.col(static_cast<Eigen::Index>(r)) = locs.col(keep[rank[r]]);
    out_w[r] = merged[rank[r]];
  }
  return DiscreteDistribution(std::move(out_locs), std::move(out_w));
}

}  // namespace

DiscreteDistribution expand_dropout(const DiscreteDistribution& base, double theta,
                                    long long support_cap, int blocks) {
  check_dropout_args(base, theta, blocks);
  const std::vector<char> all(base.dim() / blocks, 1);
  return mask_expand(base, theta, all, blocks, support_cap);
}

DropoutCompression compress_dropout(const DiscreteDistribution& base, double theta, long long M,
                                    int blocks) {
  check_dropout_args(base, theta, blocks);
  if (M < 1 || (M & (M - 1)) != 0) {
    throw InvalidArgument("compress_dropout: M must be a power of two");
  }
  int k = 0;
  while ((1LL << k) < M) ++k;
  const int units = base.dim() / blocks;
  if (k > units) {
    throw InvalidArgument("compress_dropout: log2(M) = " + std::to_string(k) +
                          " exceeds the number of units " + std::to_string(units));
  }
  std::vector<double> score(units, 0.0);
  for (int a = 0; a < base.size(); ++a) {
    for (int u = 0; u < units; ++u) {
      double s = 0.0;
      for (int b = 0; b < blocks; ++b) s += base.locations(b * units + u, a) * base.locations(b * units + u, a);
      score[u] += base.weights[a] * s;
    }
  }
  std::vector<int> order(units);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score[a] > score[b]; });

  DropoutCompression out;
  std::vector<char> active(units, 0);
  for (int t = 0; t < k; ++t) active[order[t]] = 1;
  for (int u = 0; u < units; ++u) {
    if (active[u]) out.active_units.push_back(u);
  }
  double rest = 0.0;
  for (int u = 0; u < units; ++u) {
    if (!active[u]) rest += score[u];
  }
  out.w2_bound = std::sqrt(std::max(0.0, (1.0 - theta) * rest));
  out.compressed = mask_expand(base, theta, active, blocks, std::numeric_limits<long long>::max());
  return out;
}

}  // namespace wassnet
