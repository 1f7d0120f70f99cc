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


#include "wassnet/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "wassnet/error.hpp"

namespace wassnet {

namespace {

constexpr double kFlowInf = std::numeric_limits<double>::infinity();

// Primal network simplex on the complete bipartite graph sources -> targets with
// uncapacitated arcs. Spanning-tree bookkeeping (thread / reverse thread / successor
// counts) and the strongly feasible leaving-arc rule follow the classic LEMON layout.
class NetworkSimplex {
 public:
  NetworkSimplex(const Matrix& cost, const std::vector<double>& supply,
                 const std::vector<double>& demand)
      : m_(static_cast<int>(supply.size())),
        n_(static_cast<int>(demand.size())),
        node_num_(m_ + n_),
        arc_num_(m_ * n_),
        root_(node_num_) {
    const int all_arcs = arc_num_ + node_num_;
    source_.resize(all_arcs);
    target_.resize(all_arcs);
    cost_.resize(all_arcs);
    flow_.assign(all_arcs, 0.0);
    state_.assign(all_arcs, kLower);
    double max_cost = 0.0;
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const int e = i * n_ + j;
        source_[e] = i;
        target_[e] = m_ + j;
        cost_[e] = cost(i, j);
        max_cost = std::max(max_cost, std::abs(cost_[e]));
      }
    }
    eps_ = 1e-14 * std::max(max_cost, 1e-300) * (node_num_ + 1);
    const double art_cost = (max_cost + 1.0) * (node_num_ + 1);

    parent_.resize(node_num_ + 1);
    pred_.resize(node_num_ + 1);
    pred_dir_.resize(node_num_ + 1);
    thread_.resize(node_num_ + 1);
    rev_thread_.resize(node_num_ + 1);
    succ_num_.resize(node_num_ + 1);
    last_succ_.resize(node_num_ + 1);
    pi_.assign(node_num_ + 1, 0.0);

    parent_[root_] = -1;
    pred_[root_] = -1;
    thread_[root_] = 0;
    rev_thread_[0] = root_;
    succ_num_[root_] = node_num_ + 1;
    last_succ_[root_] = root_ - 1;
    for (int u = 0, e = arc_num_; u < node_num_; ++u, ++e) {
      const double s = u < m_ ? supply[u] : -demand[u - m_];
      parent_[u] = root_;
      pred_[u] = e;
      thread_[u] = u + 1;
      rev_thread_[u + 1] = u;
      succ_num_[u] = 1;
      last_succ_[u] = u;
      state_[e] = kTree;
      if (s >= 0) {
        pred_dir_[u] = kUp;
        pi_[u] = 0.0;
        source_[e] = u;
        target_[e] = root_;
        flow_[e] = s;
        cost_[e] = 0.0;
      } else {
        pred_dir_[u] = kDown;
        pi_[u] = art_cost;
        source_[e] = root_;
        target_[e] = u;
        flow_[e] = -s;
        cost_[e] = art_cost;
      }
    }
    block_size_ = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(arc_num_))));
  }

  void run() {
    const long long max_pivots = 50LL * (arc_num_ + node_num_) + 10000;
    long long pivots = 0;
    while (find_entering_arc()) {
      if (++pivots > max_pivots) {
        throw ConvergenceError("solve_discrete_ot: pivot limit reached", 0.0);
      }
      find_join_node();
      const bool change = find_leaving_arc();
      change_flow(change);
      if (change) {
        update_tree_structure();
        update_potential();
      }
    }
  }

  double flow(int i, int j) const { return flow_[i * n_ + j]; }

  double artificial_flow() const {
    double total = 0.0;
    for (int e = arc_num_; e < arc_num_ + node_num_; ++e) total += flow_[e];
    return total;
  }

 private:
  static constexpr int kUp = 1;
  static constexpr int kDown = -1;
  static constexpr int kTree = 0;
  static constexpr int kLower = 1;

  bool find_entering_arc() {
    double best = -eps_;
    int cnt = block_size_;
    int e;
    bool found = false;
    auto scan = [&](int arc) {
      const double c = state_[arc] * (cost_[arc] + pi_[source_[arc]] - pi_[target_[arc]]);
      if (c < best) {
        best = c;
        in_arc_ = arc;
        found = true;
      }
      if (--cnt == 0) {
        if (found) return true;
        cnt = block_size_;
      }
      return false;
    };
    for (e = next_arc_; e < arc_num_; ++e) {
      if (scan(e)) {
        next_arc_ = e + 1 == arc_num_ ? 0 : e + 1;
        return true;
      }
    }
    for (e = 0; e < next_arc_; ++e) {
      if (scan(e)) {
        next_arc_ = e + 1;
        return true;
      }
    }
    if (!found) return false;
    next_arc_ = e;
    return true;
  }

  void find_join_node() {
    int u = source_[in_arc_];
    int v = target_[in_arc_];
    while (u != v) {
      if (succ_num_[u] < succ_num_[v]) {
        u = parent_[u];
      } else {
        v = parent_[v];
      }
    }
    join_ = u;
  }

  bool find_leaving_arc() {
    int first, second;
    if (state_[in_arc_] == kLower) {
      first = source_[in_arc_];
      second = target_[in_arc_];
    } else {
      first = target_[in_arc_];
      second = source_[in_arc_];
    }
    delta_ = kFlowInf;
    int result = 0;
    for (int u = first; u != join_; u = parent_[u]) {
      if (pred_dir_[u] != kUp) continue;
      const double d = flow_[pred_[u]];
      if (d < delta_) {
        delta_ = d;
        u_out_ = u;
        result = 1;
      }
    }
    for (int u = second; u != join_; u = parent_[u]) {
      if (pred_dir_[u] != kDown) continue;
      const double d = flow_[pred_[u]];
      if (d <= delta_) {
        delta_ = d;
        u_out_ = u;
        result = 2;
      }
    }
    if (result == 0) throw NumericalError("solve_discrete_ot: unbounded pivot");
    if (result == 1) {
      u_in_ = first;
      v_in_ = second;
    } else {
      u_in_ = second;
      v_in_ = first;
    }
    return true;
  }

  void change_flow(bool change) {
    if (delta_ > 0) {
      const double val = state_[in_arc_] * delta_;
      flow_[in_arc_] += val;
      for (int u = source_[in_arc_]; u != join_; u = parent_[u]) {
        double& f = flow_[pred_[u]];
        f = std::max(0.0, f - pred_dir_[u] * val);
      }
      for (int u = target_[in_arc_]; u != join_; u = parent_[u]) {
        double& f = flow_[pred_[u]];
        f = std::max(0.0, f + pred_dir_[u] * val);
      }
    }
    if (change) {
      state_[in_arc_] = kTree;
      flow_[pred_[u_out_]] = 0.0;
      state_[pred_[u_out_]] = kLower;
    } else {
      state_[in_arc_] = -state_[in_arc_];
    }
  }

  void update_tree_structure() {
    const int old_rev_thread = rev_thread_[u_out_];
    const int old_succ_num = succ_num_[u_out_];
    const int old_last_succ = last_succ_[u_out_];
    const int v_out = parent_[u_out_];

    if (u_in_ == u_out_) {
      parent_[u_in_] = v_in_;
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kUp : kDown;
      if (thread_[v_in_] != u_out_) {
        int after = thread_[old_last_succ];
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
        after = thread_[v_in_];
        thread_[v_in_] = u_out_;
        rev_thread_[u_out_] = v_in_;
        thread_[old_last_succ] = after;
        rev_thread_[after] = old_last_succ;
      }
    } else {
      const int thread_continue =
          old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];
      int stem = u_in_;
      int par_stem = v_in_;
      int last = last_succ_[u_in_];
      int after = thread_[last];
      thread_[v_in_] = u_in_;
      dirty_revs_.clear();
      dirty_revs_.push_back(v_in_);
      while (stem != u_out_) {
        const int next_stem = parent_[stem];
        thread_[last] = next_stem;
        dirty_revs_.push_back(last);
        const int before = rev_thread_[stem];
        thread_[before] = after;
        rev_thread_[after] = before;
        parent_[stem] = par_stem;
        par_stem = stem;
        stem = next_stem;
        last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem]
                                                          : last_succ_[stem];
        after = thread_[last];
      }
      parent_[u_out_] = par_stem;
      thread_[last] = thread_continue;
      rev_thread_[thread_continue] = last;
      last_succ_[u_out_] = last;
      if (old_rev_thread != v_in_) {
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
      }
      for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

      int tmp_sc = 0;
      const int tmp_ls = last_succ_[u_out_];
      for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
        pred_[u] = pred_[p];
        pred_dir_[u] = -pred_dir_[p];
        tmp_sc += succ_num_[u] - succ_num_[p];
        succ_num_[u] = tmp_sc;
        last_succ_[p] = tmp_ls;
      }
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kUp : kDown;
      succ_num_[u_in_] = old_succ_num;
    }

    const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
    const int last_succ_out = last_succ_[u_out_];
    for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) {
      last_succ_[u] = last_succ_out;
    }
    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (int u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
        last_succ_[u] = old_rev_thread;
      }
    } else if (last_succ_out != old_last_succ) {
      for (int u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
        last_succ_[u] = last_succ_out;
      }
    }
    for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
    for (int u = v_out; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
  }

  void update_potential() {
    const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost_[in_arc_];
    const int end = thread_[last_succ_[u_in_]];
    for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  int m_, n_, node_num_, arc_num_, root_;
  std::vector<int> source_, target_;
  std::vector<double> cost_, flow_;
  std::vector<int> state_;
  std::vector<int> parent_, pred_, pred_dir_, thread_, rev_thread_, succ_num_, last_succ_;
  std::vector<double> pi_;
  std::vector<int> dirty_revs_;
  double eps_ = 0.0;
  int block_size_ = 10;
  int next_arc_ = 0;
  int in_arc_ = -1, join_ = -1, u_in_ = -1, v_in_ = -1, u_out_ = -1;
  double delta_ = 0.0;
};

double total(const std::vector<double>& w) { return std::accumulate(w.begin(), w.end(), 0.0); }

void check_marginal(const std::vector<double>& w, const char* what) {
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InvalidArgument(std::string("solve_discrete_ot: ") + what +
                            " marginal must be finite and nonnegative");
    }
  }
}

}  // namespace

TransportPlan solve_discrete_ot(const Matrix& cost, const std::vector<double>& a,
                                const std::vector<double>& b) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  if (m == 0 || n == 0) throw InvalidArgument("solve_discrete_ot: empty marginal");
  if (cost.rows() != m || cost.cols() != n) {
    throw InvalidArgument("solve_discrete_ot: cost matrix shape does not match marginals");
  }
  if (!cost.allFinite()) throw InvalidArgument("solve_discrete_ot: cost entries must be finite");
  check_marginal(a, "source");
  check_marginal(b, "target");
  const double sa = total(a);
  const double sb = total(b);
  if (std::abs(sa - sb) > kTolerances.marginal_abs) {
    throw InvalidArgument("solve_discrete_ot: marginals have different total mass");
  }
  if (!(sa > 0.0)) throw InvalidArgument("solve_discrete_ot: marginals carry no mass");

  std::vector<int> rows, cols;
  std::vector<double> ra, cb;
  for (int i = 0; i < m; ++i) {
    if (a[i] > 0.0) {
      rows.push_back(i);
      ra.push_back(a[i]);
    }
  }
  for (int j = 0; j < n; ++j) {
    if (b[j] > 0.0) {
      cols.push_back(j);
      cb.push_back(b[j] * (sa / sb));
    }
  }
  Matrix reduced(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) reduced(i, j) = cost(rows[i], cols[j]);
  }

  NetworkSimplex solver(reduced, ra, cb);
  solver.run();
  if (solver.artificial_flow() > kTolerances.marginal_abs) {
    throw NumericalError("solve_discrete_ot: no feasible plan found");
  }

  TransportPlan out;
  out.plan = Matrix::Zero(m, n);
  double c = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double f = solver.flow(static_cast<int>(i), static_cast<int>(j));
      if (f == 0.0) continue;
      out.plan(rows[i], cols[j]) = f;
      c += f * reduced(i, j);
    }
  }
  out.cost = c;
  return out;
}

namespace {

template <typename RowCost>
void jv_initialize(int n, RowCost& row_cost, std::vector<int>& x, std::vector<int>& y,
                   std::vector<double>& v, std::vector<int>& free_rows) {
  std::vector<double> row(n);
  // Column reduction.
  for (int i = 0; i < n; ++i) {
    row_cost(i, row.data());
    for (int j = 0; j < n; ++j) {
      if (row[j] < v[j]) {
        v[j] = row[j];
        y[j] = i;
      }
    }
  }
  std::vector<char> unique(n, 1);
  for (int j = n; j-- > 0;) {
    const int i = y[j];
    if (x[i] < 0) {
      x[i] = j;
    } else {
      unique[i] = 0;
      y[j] = -1;
    }
  }
  // Reduction transfer.
  for (int i = 0; i < n; ++i) {
    if (x[i] < 0) {
      free_rows.push_back(i);
    } else if (unique[i]) {
      const int j = x[i];
      row_cost(i, row.data());
      double mn = std::numeric_limits<double>::infinity();
      for (int j2 = 0; j2 < n; ++j2) {
        if (j2 != j) mn = std::min(mn, row[j2] - v[j2]);
      }
      if (std::isfinite(mn)) v[j] -= mn;
    }
  }

  // Augmenting row reduction, two passes.
  for (int pass = 0; pass < 2 && !free_rows.empty(); ++pass) {
    std::size_t current = 0;
    std::size_t new_free = 0;
    long long rr_cnt = 0;
    const std::size_t n_free = free_rows.size();
    while (current < n_free) {
      ++rr_cnt;
      const int free_i = free_rows[current++];
      row_cost(free_i, row.data());
      int j1 = 0;
      double v1 = row[0] - v[0];
      int j2 = -1;
      double v2 = std::numeric_limits<double>::infinity();
      for (int j = 1; j < n; ++j) {
        const double c = row[j] - v[j];
        if (c < v2) {
          if (c >= v1) {
            v2 = c;
            j2 = j;
          } else {
            v2 = v1;
            v1 = c;
            j2 = j1;
            j1 = j;
          }
        }
      }
      int i0 = y[j1];
      const double v1_new = v[j1] - (v2 - v1);
      const bool v1_lowers = v1_new < v[j1];
      if (rr_cnt < static_cast<long long>(current) * n) {
        if (v1_lowers) {
          v[j1] = v1_new;
        } else if (i0 >= 0 && j2 >= 0) {
          j1 = j2;
          i0 = y[j2];
        }
        if (i0 >= 0) {
          if (v1_lowers) {
            free_rows[--current] = i0;
          } else {
            free_rows[new_free++] = i0;
          }
        }
      } else if (i0 >= 0) {
        free_rows[new_free++] = i0;
      }
      x[free_i] = j1;
      y[j1] = free_i;
    }
    free_rows.resize(new_free);
  }

}

template <typename RowCost>
void jv_augment(int n, RowCost& row_cost, std::vector<int>& x, std::vector<int>& y,
                std::vector<double>& v, const std::vector<int>& free_rows) {
  std::vector<double> row(n);
  // Augmentation.
  std::vector<int> pred(n), cols(n);
  std::vector<double> d(n);
  for (int start : free_rows) {
    row_cost(start, row.data());
    for (int j = 0; j < n; ++j) {
      cols[j] = j;
      pred[j] = start;
      d[j] = row[j] - v[j];
    }
    int lo = 0, hi = 0, n_ready = 0, final_j = -1;
    while (final_j < 0) {
      if (lo == hi) {
        n_ready = lo;
        hi = lo + 1;
        double mind = d[cols[lo]];
        for (int k = hi; k < n; ++k) {
          const int j = cols[k];
          if (d[j] <= mind) {
            if (d[j] < mind) {
              hi = lo;
              mind = d[j];
            }
            cols[k] = cols[hi];
            cols[hi++] = j;
          }
        }
        for (int k = lo; k < hi; ++k) {
          if (y[cols[k]] < 0) {
            final_j = cols[k];
            break;
          }
        }
      }
      if (final_j >= 0) break;
      // Scan the columns that became ready.
      while (lo != hi && final_j < 0) {
        const int j0 = cols[lo++];
        const int i = y[j0];
        const double mind = d[j0];
        row_cost(i, row.data());
        const double h = row[j0] - v[j0] - mind;
        for (int k = hi; k < n; ++k) {
          const int j = cols[k];
          const double cred = row[j] - v[j] - h;
          if (cred < d[j]) {
            d[j] = cred;
            pred[j] = i;
            if (cred == mind) {
              if (y[j] < 0) {
                final_j = j;
                break;
              }
              cols[k] = cols[hi];
              cols[hi++] = j;
            }
          }
        }
      }
    }
    const double mind = d[final_j];
    for (int k = 0; k < n_ready; ++k) {
      const int j = cols[k];
      v[j] += d[j] - mind;
    }
    int i = -1;
    int j = final_j;
    while (i != start) {
      i = pred[j];
      y[j] = i;
      std::swap(j, x[i]);
    }
  }
}

// kd-tree over target points answering "two smallest ||x - y_j||^2 + price_j" queries
// under price updates. Each node keeps its bounding box and the minimum price below it,
// so dist(x, box)^2 + min_price is a lower bound used for pruning.
class PricedKdTree {
 public:
  explicit PricedKdTree(const Matrix& ys, int leaf_size = 32)
      : d_(static_cast<int>(ys.cols())), leaf_size_(leaf_size) {
    const int n = static_cast<int>(ys.rows());
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    build(ys, 0, n, -1);
    points_.resize(d_, n);
    slot_.resize(n);
    for (int k = 0; k < n; ++k) {
      points_.col(k) = ys.row(order_[k]).transpose();
      slot_[order_[k]] = k;
    }
    price_.assign(n, 0.0);
    norm_.resize(n);
    for (int k = 0; k < n; ++k) norm_[k] = points_.col(k).squaredNorm();
    for (int node = static_cast<int>(nodes_.size()); node-- > 0;) refresh(node);
    leaf_of_.resize(n);
    for (int node = 0; node < static_cast<int>(nodes_.size()); ++node) {
      if (nodes_[node].left >= 0) continue;
      for (int k = nodes_[node].begin; k < nodes_[node].end; ++k) leaf_of_[k] = node;
    }
  }

  void add_price(int j, double delta) {
    const int k = slot_[j];
    price_[k] += delta;
    for (int node = leaf_of_[k]; node >= 0; node = nodes_[node].parent) {
      if (!refresh(node)) break;
    }
  }

  double price(int j) const { return price_[slot_[j]]; }

  /// Smallest value g1 at point j1 and the second smallest value g2.
  void best_two(const Vector& x, int& j1, double& g1, double& g2) const {
    g1 = g2 = std::numeric_limits<double>::infinity();
    int k1 = -1;
    stack_.clear();
    stack_.push_back({0, lower_bound(0, x)});
    while (!stack_.empty()) {
      const Pending top = stack_.back();
      stack_.pop_back();
      if (top.lb >= g2) continue;
      const Node& nd = nodes_[top.node];
      if (nd.left < 0) {
        for (int k = nd.begin; k < nd.end; ++k) {
          const double g = (points_.col(k) - x).squaredNorm() + price_[k];
          if (g < g1) {
            g2 = g1;
            g1 = g;
            k1 = k;
          } else if (g < g2) {
            g2 = g;
          }
        }
        continue;
      }
      const double ll = lower_bound(nd.left, x);
      const double lr = lower_bound(nd.right, x);
      if (ll < lr) {
        stack_.push_back({nd.right, lr});
        stack_.push_back({nd.left, ll});
      } else {
        stack_.push_back({nd.left, ll});
        stack_.push_back({nd.right, lr});
      }
    }
    j1 = order_[k1];
  }

 private:
  struct Node {
    int begin = 0, end = 0;
    int left = -1, right = -1, parent = -1;
    double min_price = 0.0;
    double min_base = 0.0;  // min of ||y||^2 + price
    Vector lo, hi;
  };
  struct Pending {
    int node;
    double lb;
  };

  int build(const Matrix& ys, int begin, int end, int parent) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Node nd;
    nd.begin = begin;
    nd.end = end;
    nd.parent = parent;
    nd.lo = Vector::Constant(d_, std::numeric_limits<double>::infinity());
    nd.hi = Vector::Constant(d_, -std::numeric_limits<double>::infinity());
    for (int k = begin; k < end; ++k) {
      nd.lo = nd.lo.cwiseMin(ys.row(order_[k]).transpose());
      nd.hi = nd.hi.cwiseMax(ys.row(order_[k]).transpose());
    }
    if (end - begin > leaf_size_) {
      Eigen::Index axis = 0;
      (nd.hi - nd.lo).maxCoeff(&axis);
      const int mid = begin + (end - begin) / 2;
      std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                       [&](int a, int b) { return ys(a, axis) < ys(b, axis); });
      nd.left = build(ys, begin, mid, id);
      nd.right = build(ys, mid, end, id);
    }
    nodes_[id] = std::move(nd);
    return id;
  }

  // Recomputes the node's price summaries; returns whether they changed.
  bool refresh(int node) {
    Node& nd = nodes_[node];
    double mp = std::numeric_limits<double>::infinity();
    double mb = mp;
    if (nd.left < 0) {
      for (int k = nd.begin; k < nd.end; ++k) {
        mp = std::min(mp, price_[k]);
        mb = std::min(mb, price_[k] + norm_[k]);
      }
    } else {
      mp = std::min(nodes_[nd.left].min_price, nodes_[nd.right].min_price);
      mb = std::min(nodes_[nd.left].min_base, nodes_[nd.right].min_base);
    }
    const bool changed = mp != nd.min_price || mb != nd.min_base;
    nd.min_price = mp;
    nd.min_base = mb;
    return changed;
  }

  // max(dist(x, box)^2 + min price, ||x||^2 - 2 max_box <x, y> + min(||y||^2 + price)).
  double lower_bound(int node, const Vector& x) const {
    const Node& nd = nodes_[node];
    double dist = 0.0;
    double inner = 0.0;
    for (int k = 0; k < d_; ++k) inner += std::max(x[k] * nd.lo[k], x[k] * nd.hi[k]);
    const double linear = x.squaredNorm() - 2.0 * inner + nd.min_base;
    for (int k = 0; k < d_; ++k) {
      double gap = 0.0;
      if (x[k] < nd.lo[k]) {
        gap = nd.lo[k] - x[k];
      } else if (x[k] > nd.hi[k]) {
        gap = x[k] - nd.hi[k];
      }
      dist += gap * gap;
    }
    return std::max(dist + nd.min_price, linear);
  }

  int d_;
  int leaf_size_;
  std::vector<Node> nodes_;
  std::vector<int> order_;  // slot -> point
  std::vector<int> slot_;   // point -> slot
  std::vector<int> leaf_of_;
  Matrix points_;  // d x n in slot order
  std::vector<double> price_;
  std::vector<double> norm_;
  mutable std::vector<Pending> stack_;
};

// Forward auction with epsilon scaling on squared Euclidean costs between the rows of
// `xs` and `ys`. Returns column potentials (negated prices) close to an optimal dual
// solution; used only to warm-start the exact solver.
std::vector<double> auction_potentials(const Matrix& xs, const Matrix& ys, double cost_scale) {
  const int n = static_cast<int>(xs.rows());
  PricedKdTree tree(ys);
  std::vector<int> owner(n), queue;
  queue.reserve(n);
  const double eps_final = cost_scale * 1e-3 / n;
  double eps = cost_scale / 4.0;
  Vector x(xs.cols());
  while (true) {
    std::fill(owner.begin(), owner.end(), -1);
    queue.clear();
    for (int i = n; i-- > 0;) queue.push_back(i);
    while (!queue.empty()) {
      const int i = queue.back();
      queue.pop_back();
      x = xs.row(i).transpose();
      int j1 = 0;
      double g1 = 0.0, g2 = 0.0;
      tree.best_two(x, j1, g1, g2);
      tree.add_price(j1, (n > 1 ? g2 - g1 : 0.0) + eps);
      if (owner[j1] >= 0) queue.push_back(owner[j1]);
      owner[j1] = i;
    }
    if (eps <= eps_final) break;
    eps = std::max(eps / 6.0, eps_final);
  }
  std::vector<double> v(n);
  for (int j = 0; j < n; ++j) v[j] = -tree.price(j);
  return v;
}

// Jonker-Volgenant shortest augmenting path assignment. `row_cost(i, out)` fills the
// costs of row i into `out`; rows are recomputed on demand instead of being stored.
// With `warm_v`, the initialization heuristics are skipped and every row starts free.
template <typename RowCost>
std::vector<int> jonker_volgenant(int n, RowCost&& row_cost,
                                  const std::vector<double>* warm_v = nullptr) {
  std::vector<int> x(n, -1), y(n, 0);
  std::vector<double> v(n, std::numeric_limits<double>::infinity());
  std::vector<double> row(n);
  std::vector<int> free_rows;

  if (warm_v) {
    v = *warm_v;
    std::fill(y.begin(), y.end(), -1);
    for (int i = 0; i < n; ++i) free_rows.push_back(i);
  } else {
    jv_initialize(n, row_cost, x, y, v, free_rows);
  }
  jv_augment(n, row_cost, x, y, v, free_rows);
  return x;
}

}  // namespace

std::vector<int> solve_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw InvalidArgument("solve_assignment: matrix not square");
  if (!cost.allFinite()) throw InvalidArgument("solve_assignment: cost entries must be finite");
  const int n = static_cast<int>(cost.rows());
  if (n == 0) return {};
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> c = cost;
  return jonker_volgenant(n, [&](int i, double* out) {
    std::copy(c.row(i).data(), c.row(i).data() + n, out);
  });
}

Matrix mixture_cost_matrix(const GaussianMixture& p, const GaussianMixture& q) {
  if (p.dim() != q.dim()) throw InvalidArgument("mw2: mixtures differ in dimension");
  Matrix c = Matrix::Zero(p.size(), q.size());
  for (int i = 0; i < p.size(); ++i) {
    if (p.weight(i) <= 0.0) continue;
    for (int j = 0; j < q.size(); ++j) {
      if (q.weight(j) <= 0.0) continue;
      c(i, j) = gaussian_w2_squared(p.component(i), q.component(j));
    }
  }
  return c;
}

Mw2Result mw2(const GaussianMixture& p, const GaussianMixture& q) {
  if (p.dim() != q.dim()) throw InvalidArgument("mw2: mixtures differ in dimension");
  Mw2Result out;
  bool identical = p.size() == q.size() && p.weights() == q.weights();
  for (int i = 0; identical && i < p.size(); ++i) {
    identical = p.component(i).same_as(q.component(i));
  }
  if (identical) {
    out.plan.plan = Matrix::Zero(p.size(), q.size());
    for (int i = 0; i < p.size(); ++i) out.plan.plan(i, i) = p.weight(i);
    return out;
  }
  const Matrix cost = mixture_cost_matrix(p, q);
  out.plan = solve_discrete_ot(cost, p.weights(), q.weights());
  out.plan.cost = std::max(out.plan.cost, 0.0);
  out.distance = std::sqrt(out.plan.cost);
  return out;
}

double EmpiricalW2::standard_error() const {
  const std::size_t n = matched_costs.size();
  if (n < 2 || value <= 0.0) return 0.0;
  double mean = 0.0;
  for (double c : matched_costs) mean += c;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double c : matched_costs) ss += (c - mean) * (c - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return sd / std::sqrt(static_cast<double>(n)) / (2.0 * value);
}

EmpiricalW2 empirical_w2_detailed(const Matrix& xs, const Matrix& ys,
                                  long long max_cost_entries) {
  if (xs.rows() == 0 || ys.rows() == 0) throw InvalidArgument("empirical_w2: empty sample set");
  if (xs.cols() != ys.cols()) throw InvalidArgument("empirical_w2: sample dimensions differ");
  const long long entries = static_cast<long long>(xs.rows()) * ys.rows();
  if (entries > max_cost_entries) {
    throw CapacityError("empirical_w2: " + std::to_string(xs.rows()) + " x " +
                        std::to_string(ys.rows()) + " cost entries exceed the cap of " +
                        std::to_string(max_cost_entries) + "; subsample the inputs");
  }
  const Vector xn = xs.rowwise().squaredNorm();
  const Vector yn = ys.rowwise().squaredNorm();
  EmpiricalW2 out;
  if (xs.rows() == ys.rows()) {
    const int n = static_cast<int>(xs.rows());
    // Translating one cloud adds f_i + g_j to the costs, which leaves the optimal
    // permutation unchanged; matching centered clouds gives much shorter augmenting paths.
    const Eigen::RowVectorXd shift = xs.colwise().mean() - ys.colwise().mean();
    const Matrix yc = ys.rowwise() + shift;
    const Vector ycn = yc.rowwise().squaredNorm();
    Vector buf(n);
    auto row_cost = [&](int i, double* dst) {
      buf.noalias() = yc * xs.row(i).transpose();
      for (int j = 0; j < n; ++j) dst[j] = xn[i] + ycn[j] - 2.0 * buf[j];
    };
    const double scale = std::pow(std::sqrt(xn.maxCoeff()) + std::sqrt(ycn.maxCoeff()), 2);
    std::vector<int> match;
    if (n >= 64 && scale > 0.0) {
      const std::vector<double> v = auction_potentials(xs, yc, scale);
      match = jonker_volgenant(n, row_cost, &v);
    } else {
      match = jonker_volgenant(n, row_cost);
    }
    out.matched_costs.resize(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double c = std::max(0.0, xn[i] + yn[match[i]] - 2.0 * xs.row(i).dot(ys.row(match[i])));
      out.matched_costs[i] = c;
      sum += c;
    }
    out.value = std::sqrt(sum / n);
    return out;
  }
  Matrix cost(xs.rows(), ys.rows());
  cost.noalias() = -2.0 * xs * ys.transpose();
  cost.colwise() += xn;
  cost.rowwise() += yn.transpose();
  cost = cost.cwiseMax(0.0);
  const std::vector<double> a(xs.rows(), 1.0 / static_cast<double>(xs.rows()));
  const std::vector<double> b(ys.rows(), 1.0 / static_cast<double>(ys.rows()));
  out.value = std::sqrt(std::max(0.0, solve_discrete_ot(cost, a, b).cost));
  return out;
}

double empirical_w2(const Matrix& xs, const Matrix& ys, long long max_cost_entries) {
  return empirical_w2_detailed(xs, ys, max_cost_entries).value;
}

double discrete_w2(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (p.dim() != q.dim()) throw InvalidArgument("discrete_w2: dimensions differ");
  Matrix cost(p.size(), q.size());
  for (int i = 0; i < p.size(); ++i) {
    for (int j = 0; j < q.size(); ++j) cost(i, j) = (p.atom(i) - q.atom(j)).squaredNorm();
  }
  return std::sqrt(std::max(0.0, solve_discrete_ot(cost, p.weights, q.weights).cost));
}

double relative_w2(double w2_value, const GaussianMixture& reference) {
  const double m2 = mixture_second_moment(reference);
  if (!(m2 > 0.0)) throw InvalidArgument("relative_w2: reference has zero second moment");
  return w2_value / std::sqrt(m2);
}

}  // namespace wassnet
