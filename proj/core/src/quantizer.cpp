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


#include "wassnet/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wassnet/error.hpp"

namespace wassnet {

namespace {

struct CellMoments {
  Interval cell;
  double mass;
  double mean;
  double var;
};

std::vector<double> midpoints(const std::vector<double>& c) {
  std::vector<double> b(c.size() > 0 ? c.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < c.size(); ++i) b[i] = 0.5 * (c[i] + c[i + 1]);
  return b;
}

Interval voronoi_cell(const std::vector<double>& b, std::size_t i) {
  Interval cell;
  if (i > 0) cell.lo = b[i - 1];
  if (i < b.size()) cell.hi = b[i];
  return cell;
}

std::vector<CellMoments> cell_moments(const std::vector<double>& c) {
  const std::vector<double> b = midpoints(c);
  std::vector<CellMoments> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Interval cell = voronoi_cell(b, i);
    const TruncatedMoments1D t = truncated_moments_1d(0.0, 1.0, cell);
    out[i] = {cell, t.mass, t.mean, t.variance};
  }
  return out;
}

double max_residual(const std::vector<double>& c, const std::vector<CellMoments>& m) {
  double r = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) r = std::max(r, std::abs(c[i] - m[i].mean));
  return r;
}

void symmetrize(std::vector<double>& c) {
  const std::size_t n = c.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double v = 0.5 * (c[n - 1 - i] - c[i]);
    c[i] = -v;
    c[n - 1 - i] = v;
  }
  if (n % 2 == 1) c[n / 2] = 0.0;
}

bool strictly_increasing(const std::vector<double>& c) {
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    if (!(c[i] < c[i + 1])) return false;
  }
  return true;
}

// Newton step for c - centroid(c) = 0. The Jacobian is tridiagonal because each
// centroid depends only on the two boundaries of its own cell.
std::vector<double> newton_step(const std::vector<double>& c, const std::vector<CellMoments>& m) {
  const std::size_t n = c.size();
  std::vector<double> sub(n, 0.0), diag(n, 1.0), sup(n, 0.0), rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CellMoments& cm = m[i];
    const double lower = cm.cell.bounded_below()
                             ? std_normal_pdf(cm.cell.lo) * (cm.mean - cm.cell.lo) / cm.mass
                             : 0.0;
    const double upper = cm.cell.bounded_above()
                             ? std_normal_pdf(cm.cell.hi) * (cm.cell.hi - cm.mean) / cm.mass
                             : 0.0;
    sub[i] = -0.5 * lower;
    diag[i] = 1.0 - 0.5 * (lower + upper);
    sup[i] = -0.5 * upper;
    rhs[i] = -(c[i] - cm.mean);
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double f = sub[i] / diag[i - 1];
    diag[i] -= f * sup[i - 1];
    rhs[i] -= f * rhs[i - 1];
  }
  std::vector<double> delta(n);
  delta[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) delta[i] = (rhs[i] - sup[i] * delta[i + 1]) / diag[i];
  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) next[i] = c[i] + delta[i];
  return next;
}

}  // namespace

Interval Quantizer1D::cell(int i) const { return voronoi_cell(boundaries, i); }

double quantizer_distortion(const std::vector<double>& locations) {
  if (locations.empty()) throw InvalidArgument("quantizer_distortion: empty codebook");
  if (!strictly_increasing(locations)) {
    throw InvalidArgument("quantizer_distortion: locations must be strictly increasing");
  }
  double d = 0.0;
  const auto m = cell_moments(locations);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double off = m[i].mean - locations[i];
    d += m[i].mass * (m[i].var + off * off);
  }
  return d;
}

Quantizer1D solve_quantizer_1d(int n, double tol, int max_iters) {
  if (n < 1) throw InvalidArgument("solve_quantizer_1d: N must be at least 1");
  if (!(tol > 0.0) || max_iters < 1) {
    throw InvalidArgument("solve_quantizer_1d: tol and max_iters must be positive");
  }
  Quantizer1D q;
  q.size = n;
  if (n == 1) {
    q.locations = {0.0};
    q.w2sq = 1.0;
    return q;
  }

  // Companding start: point density proportional to phi^(1/3), i.e. N(0, 3).
  std::vector<double> c(n);
  for (int i = 0; i < n; ++i) c[i] = std::sqrt(3.0) * std_normal_quantile((i + 0.5) / n);
  symmetrize(c);

  auto m = cell_moments(c);
  double residual = max_residual(c, m);
  int it = 0;
  while (residual >= tol) {
    if (it >= max_iters) {
      throw ConvergenceError("solve_quantizer_1d: no convergence for N=" + std::to_string(n),
                             residual);
    }
    ++it;
    std::vector<double> trial = newton_step(c, m);
    symmetrize(trial);
    bool accepted = false;
    if (strictly_increasing(trial)) {
      auto tm = cell_moments(trial);
      const double tr = max_residual(trial, tm);
      if (tr < residual) {
        c = std::move(trial);
        m = std::move(tm);
        residual = tr;
        accepted = true;
      }
    }
    if (!accepted) {
      for (int i = 0; i < n; ++i) c[i] = m[i].mean;
      symmetrize(c);
      m = cell_moments(c);
      residual = max_residual(c, m);
    }
  }
  q.locations = std::move(c);
  q.boundaries = midpoints(q.locations);
  q.iterations = it;
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double off = m[i].mean - q.locations[i];
    d += m[i].mass * (m[i].var + off * off);
  }
  q.w2sq = d;
  return q;
}

QuantizerTable::QuantizerTable(std::vector<Quantizer1D> entries, double tol, int max_iters)
    : entries_(std::move(entries)), tol_(tol), max_iters_(max_iters) {
  if (entries_.empty()) throw InvalidArgument("QuantizerTable: no entries");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    Quantizer1D& q = entries_[i];
    const int n = static_cast<int>(i) + 1;
    if (q.size != n || static_cast<int>(q.locations.size()) != n) {
      throw InvalidArgument("QuantizerTable: sizes must be contiguous from 1 (missing N=" +
                            std::to_string(n) + ")");
    }
    if (!strictly_increasing(q.locations)) {
      throw InvalidArgument("QuantizerTable: locations of N=" + std::to_string(n) +
                            " are not strictly increasing");
    }
    if (!(q.w2sq >= 0.0)) throw InvalidArgument("QuantizerTable: negative distortion");
    if (i > 0 && !(q.w2sq < entries_[i - 1].w2sq)) {
      throw InvalidArgument("QuantizerTable: distortion must strictly decrease in N (N=" +
                            std::to_string(n) + ")");
    }
    q.boundaries = midpoints(q.locations);
  }
}

QuantizerTable QuantizerTable::build(int max_n, double tol, int max_iters) {
  if (max_n < 1) throw InvalidArgument("QuantizerTable::build: max_n must be at least 1");
  std::vector<Quantizer1D> entries;
  entries.reserve(max_n);
  for (int n = 1; n <= max_n; ++n) entries.push_back(solve_quantizer_1d(n, tol, max_iters));
  return QuantizerTable(std::move(entries), tol, max_iters);
}

const Quantizer1D& QuantizerTable::at(int n) const {
  if (n < 1 || n > max_size()) {
    throw InvalidArgument("QuantizerTable: no entry for N=" + std::to_string(n));
  }
  return entries_[n - 1];
}

const QuantizerTable& default_quantizer_table() {
  static const QuantizerTable table = QuantizerTable::build(QuantizerTable::kDefaultMaxSize);
  return table;
}

namespace {

struct GridSearch {
  const std::vector<double>& lambda;  // nondegenerate, nonincreasing
  const QuantizerTable& table;
  long long budget;
  std::vector<double> suffix;  // sum of lambda[j..]
  std::vector<int> current;
  std::vector<int> best;
  double best_objective = std::numeric_limits<double>::infinity();

  void run(std::size_t j, long long prod, int max_n, double partial) {
    const double all_ones = partial + suffix[j];
    if (j == lambda.size()) {
      consider(all_ones);
      return;
    }
    const long long room = budget / prod;
    const int cap = static_cast<int>(std::min<long long>({room, max_n, table.max_size()}));
    if (cap >= 2 && partial + table.w2sq(cap) * suffix[j] < best_objective) {
      for (int n = cap; n >= 2; --n) {
        current[j] = n;
        run(j + 1, prod * n, n, partial + lambda[j] * table.w2sq(n));
      }
    }
    for (std::size_t l = j; l < lambda.size(); ++l) current[l] = 1;
    consider(all_ones);
  }

  void consider(double objective) {
    if (objective < best_objective) {
      best_objective = objective;
      best = current;
    }
  }
};

}  // namespace

GridAllocation allocate_grid(const Vector& eigenvalues, long long budget,
                             const QuantizerTable& table, double degeneracy_rel) {
  if (eigenvalues.size() == 0) throw InvalidArgument("allocate_grid: empty eigenvalue vector");
  if (budget < 1) throw InvalidArgument("allocate_grid: budget must be at least 1");
  const int n = static_cast<int>(eigenvalues.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    if (!(eigenvalues[i] >= 0.0) || !std::isfinite(eigenvalues[i])) {
      throw InvalidArgument("allocate_grid: eigenvalues must be finite and nonnegative");
    }
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return eigenvalues[a] > eigenvalues[b]; });
  const double lmax = eigenvalues[order[0]];
  std::vector<double> lambda;
  for (int i : order) {
    if (lmax > 0.0 && eigenvalues[i] > degeneracy_rel * lmax) lambda.push_back(eigenvalues[i]);
  }

  GridSearch search{lambda, table, budget, {}, {}, {}};
  search.suffix.assign(lambda.size() + 1, 0.0);
  for (std::size_t j = lambda.size(); j-- > 0;) {
    search.suffix[j] = search.suffix[j + 1] + lambda[j] * table.w2sq(1);
  }
  search.current.assign(lambda.size(), 1);
  search.best.assign(lambda.size(), 1);
  search.run(0, 1, std::numeric_limits<int>::max(), 0.0);

  GridAllocation out;
  out.per_axis_sizes.assign(n, 1);
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    out.per_axis_sizes[order[j]] = search.best[j];
    out.total *= search.best[j];
  }
  out.objective = 0.0;
  for (int i = 0; i < n; ++i) out.objective += eigenvalues[i] * table.w2sq(out.per_axis_sizes[i]);
  return out;
}

GaussianSignature signature_of_gaussian(const Gaussian& g, long long budget,
                                        const QuantizerTable& table) {
  if (budget < 1) throw InvalidArgument("signature_of_gaussian: budget must be at least 1");
  const EigenBasis& eig = g.eigen();
  const int n = g.dim();
  const int r = eig.rank;

  GaussianSignature out;
  Signature& sig = out.signature;
  GridFrame frame{g.mean(), eig.scaled_basis()};

  if (r == 0) {
    sig.atoms = DiscreteDistribution(g.mean(), {1.0});
    SignatureCell cell;
    cell.component = 0;
    cell.mass = 1.0;
    sig.cells.push_back(std::move(cell));
    sig.frames.push_back(std::move(frame));
    sig.component_weights = {1.0};
    sig.component_w2sq = {0.0};
    sig.pruned_w2sq = {0.0};
    return out;
  }

  const Vector lambda = eig.eigenvalues.head(r);
  out.allocation = allocate_grid(lambda, budget, table);
  const std::vector<int>& sizes = out.allocation.per_axis_sizes;

  // Per-axis cell data of the standard-normal quantizers.
  std::vector<std::vector<CellMoments>> axis(r);
  std::vector<const Quantizer1D*> quant(r);
  for (int l = 0; l < r; ++l) {
    quant[l] = &table.at(sizes[l]);
    axis[l] = cell_moments(quant[l]->locations);
  }

  struct Pruned {
    Vector center, mean, var;
    double mass;
  };
  std::vector<SignatureCell> kept;
  std::vector<Pruned> pruned;
  std::vector<int> idx(r, 0);
  const long long total = out.allocation.total;
  for (long long k = 0; k < total; ++k) {
    double mass = 1.0;
    Vector center(r), mean(r), var(r);
    std::vector<Interval> box(r);
    for (int l = 0; l < r; ++l) {
      const CellMoments& cm = axis[l][idx[l]];
      mass *= cm.mass;
      center[l] = quant[l]->locations[idx[l]];
      mean[l] = cm.mean;
      var[l] = cm.var;
      box[l] = cm.cell;
    }
    if (mass >= kTolerances.prune_mass) {
      kept.push_back(SignatureCell{0, std::move(box), std::move(center), std::move(mean),
                                   std::move(var), mass});
    } else {
      pruned.push_back(Pruned{std::move(center), std::move(mean), std::move(var), mass});
    }
    for (int l = r - 1; l >= 0; --l) {
      if (++idx[l] < sizes[l]) break;
      idx[l] = 0;
    }
  }

  std::vector<double> weights(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) weights[i] = kept[i].mass;
  double pruned_cost = 0.0;
  double pruned_mass = 0.0;
  double reroute_extra = 0.0;
  for (const Pruned& p : pruned) {
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const double d = (lambda.array() * (kept[i].center - p.center).array().square()).sum();
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    const Vector& target = kept[nearest].center;
    const double own = (lambda.array() * (p.var.array() + (p.mean - p.center).array().square())).sum();
    const double moved = (lambda.array() * (p.var.array() + (p.mean - target).array().square())).sum();
    weights[nearest] += p.mass;
    pruned_mass += p.mass;
    pruned_cost += p.mass * moved;
    reroute_extra += p.mass * (moved - own);
  }
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  for (double& w : weights) w /= wsum;

  Matrix locs(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    locs.col(static_cast<Eigen::Index>(i)) = frame.offset + frame.transform * kept[i].center;
  }
  sig.atoms = DiscreteDistribution(std::move(locs), std::move(weights));
  sig.cells = std::move(kept);
  sig.frames.push_back(std::move(frame));
  sig.pruned_mass = pruned_mass;
  out.w2sq_exact = std::max(0.0, out.allocation.objective + reroute_extra);
  sig.component_weights = {1.0};
  sig.component_w2sq = {out.w2sq_exact};
  sig.pruned_w2sq = {pruned_cost};
  return out;
}

MixtureSignature signature_of_mixture(const GaussianMixture& g, long long budget_per_component,
                                      const QuantizerTable& table) {
  MixtureSignature out;
  Signature& sig = out.signature;
  const int k = g.size();
  sig.component_weights = g.weights();
  sig.component_w2sq.assign(k, 0.0);
  sig.pruned_w2sq.assign(k, 0.0);
  sig.frames.resize(k);

  std::vector<GaussianSignature> parts(k);
  Eigen::Index count = 0;
  for (int i = 0; i < k; ++i) {
    if (g.weight(i) <= 0.0) continue;
    parts[i] = signature_of_gaussian(g.component(i), budget_per_component, table);
    count += parts[i].signature.size();
  }
  Matrix locs(g.dim(), count);
  std::vector<double> weights;
  weights.reserve(count);
  double bound_sq = 0.0;
  Eigen::Index col = 0;
  for (int i = 0; i < k; ++i) {
    if (g.weight(i) <= 0.0) continue;
    Signature& part = parts[i].signature;
    for (int a = 0; a < part.size(); ++a) {
      locs.col(col++) = part.atoms.atom(a);
      weights.push_back(g.weight(i) * part.atoms.weights[a]);
    }
    for (SignatureCell& cell : part.cells) {
      cell.component = i;
      sig.cells.push_back(std::move(cell));
    }
    sig.frames[i] = std::move(part.frames.front());
    sig.component_w2sq[i] = parts[i].w2sq_exact;
    sig.pruned_w2sq[i] = part.pruned_w2sq.front();
    sig.pruned_mass += g.weight(i) * part.pruned_mass;
    bound_sq += g.weight(i) * parts[i].w2sq_exact;
  }
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  for (double& w : weights) w /= wsum;
  sig.atoms = DiscreteDistribution(std::move(locs), std::move(weights));
  out.w2_bound = std::sqrt(bound_sq);
  return out;
}

const char* activation_name(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw InvalidArgument("unknown activation '" + name + "' (expected relu or tanh)");
}

namespace {

// E[(relu(x) - relu(x_c))^2 | cell] for x depending on a single whitened axis:
// x = offset + a z, z ~ N(0,1) restricted to `axis_cell`.
double relu_single_axis_cost(double offset, double a, Interval axis_cell, double x_c) {
  Interval image;
  image.lo = a > 0 ? offset + a * axis_cell.lo : offset + a * axis_cell.hi;
  image.hi = a > 0 ? offset + a * axis_cell.hi : offset + a * axis_cell.lo;
  const double p_cell = std_normal_interval_mass(axis_cell.lo, axis_cell.hi);
  const double c_plus = std::max(x_c, 0.0);
  const auto pos = try_truncated_moments_1d(offset, a * a, Interval{0.0, image.hi});
  if (!pos) return c_plus * c_plus;
  const double p_pos = std::min(pos->mass, p_cell);
  const double dev = pos->mean - c_plus;
  return ((p_cell - p_pos) * c_plus * c_plus + p_pos * (pos->variance + dev * dev)) / p_cell;
}

double relu_cell_cost(const SignatureCell& cell, const GridFrame& frame) {
  const int n = static_cast<int>(frame.transform.rows());
  const int r = static_cast<int>(frame.transform.cols());
  double total = 0.0;
  for (int d = 0; d < n; ++d) {
    double lo = frame.offset[d];
    double hi = frame.offset[d];
    double x_c = frame.offset[d];
    double mean = frame.offset[d];
    double var = 0.0;
    int nonzero = 0;
    int axis = -1;
    for (int l = 0; l < r; ++l) {
      const double a = frame.transform(d, l);
      if (a == 0.0) continue;
      ++nonzero;
      axis = l;
      lo += a > 0 ? a * cell.box[l].lo : a * cell.box[l].hi;
      hi += a > 0 ? a * cell.box[l].hi : a * cell.box[l].lo;
      x_c += a * cell.center[l];
      mean += a * cell.cond_mean[l];
      var += a * a * cell.cond_var[l];
    }
    if (hi <= 0.0) continue;
    const double lipschitz = var + (mean - x_c) * (mean - x_c);
    if (lo >= 0.0 || nonzero != 1) {
      total += lipschitz;
      continue;
    }
    const double exact = relu_single_axis_cost(frame.offset[d], frame.transform(d, axis),
                                               cell.box[axis], x_c);
    total += std::min(exact, lipschitz);
  }
  return total;
}

}  // namespace

ActivationBound activation_signature_w2_bound(const Signature& sig, Activation activation,
                                              const GaussianMixture& source, bool refine) {
  const int k = static_cast<int>(sig.component_w2sq.size());
  if (k != source.size() || static_cast<int>(sig.component_weights.size()) != k) {
    throw InvalidArgument("activation_signature_w2_bound: signature does not match source");
  }
  ActivationBound out;
  double plain = 0.0;
  for (int i = 0; i < k; ++i) plain += sig.component_weights[i] * sig.component_w2sq[i];
  out.value = std::sqrt(plain);
  if (!refine || activation != Activation::kRelu) return out;
  if (!sig.has_cells()) {
    out.missing_cells = true;
    return out;
  }
  std::vector<double> comp = sig.pruned_w2sq;
  for (const SignatureCell& cell : sig.cells) {
    comp[cell.component] += cell.mass * relu_cell_cost(cell, sig.frames[cell.component]);
  }
  double refined = 0.0;
  for (int i = 0; i < k; ++i) {
    refined += sig.component_weights[i] * std::min(comp[i], sig.component_w2sq[i]);
  }
  out.value = std::min(out.value, std::sqrt(refined));
  out.refined = true;
  return out;
}

}  // namespace wassnet
