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


#ifndef WASSNET_QUANTIZER_HPP_
#define WASSNET_QUANTIZER_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "wassnet/discrete.hpp"
#include "wassnet/gaussian.hpp"
#include "wassnet/stats.hpp"
#include "wassnet/tolerances.hpp"

namespace wassnet {

/// Optimal N-point quantizer of the standard normal under squared error.
struct Quantizer1D {
  int size = 0;
  std::vector<double> locations;   // strictly increasing, symmetric about 0
  std::vector<double> boundaries;  // size - 1 midpoints
  double w2sq = 0.0;               // E|Z - q(Z)|^2
  int iterations = 0;

  Interval cell(int i) const;
};

/// Lloyd-Max fixed point with Newton acceleration. Throws ConvergenceError carrying
/// the last location change when `max_iters` is exhausted.
Quantizer1D solve_quantizer_1d(int n, double tol = kTolerances.quantizer_tol,
                               int max_iters = kTolerances.quantizer_max_iters);

/// Distortion of an arbitrary sorted codebook for N(0,1) with Voronoi cells.
double quantizer_distortion(const std::vector<double>& locations);

class QuantizerTable {
 public:
  static constexpr int kVersion = 1;
  static constexpr int kDefaultMaxSize = 512;

  QuantizerTable() = default;
  /// Entries must be contiguous sizes 1..n.
  QuantizerTable(std::vector<Quantizer1D> entries, double tol, int max_iters);

  static QuantizerTable build(int max_n, double tol = kTolerances.quantizer_tol,
                              int max_iters = kTolerances.quantizer_max_iters);

  int max_size() const { return static_cast<int>(entries_.size()); }
  const Quantizer1D& at(int n) const;
  double w2sq(int n) const { return at(n).w2sq; }
  double tol() const { return tol_; }
  int max_iters() const { return max_iters_; }
  const std::vector<Quantizer1D>& entries() const { return entries_; }

 private:
  std::vector<Quantizer1D> entries_;
  double tol_ = kTolerances.quantizer_tol;
  int max_iters_ = kTolerances.quantizer_max_iters;
};

/// Process-wide table of size QuantizerTable::kDefaultMaxSize, built on first use.
const QuantizerTable& default_quantizer_table();

struct GridAllocation {
  std::vector<int> per_axis_sizes;  // one entry per eigenvalue; degenerate axes get 1
  long long total = 1;
  double objective = 0.0;           // sum_j lambda_j * w2sq(N_j)
};

/// Exact minimizer of sum_j lambda_j w2sq(N_j) subject to prod N_j <= budget.
/// Sizes are capped at the table's largest entry.
GridAllocation allocate_grid(const Vector& eigenvalues, long long budget,
                             const QuantizerTable& table,
                             double degeneracy_rel = kTolerances.degeneracy_rel);

/// Affine map from whitened grid coordinates to the original space:
/// x = offset + transform * z, transform = V_r diag(sqrt(lambda_r)).
struct GridFrame {
  Vector offset;
  Matrix transform;
};

/// Voronoi cell of one atom: a box in the whitened coordinates of its component's frame.
struct SignatureCell {
  int component = -1;
  std::vector<Interval> box;   // one interval per frame axis
  Vector center;               // whitened location of the atom
  Vector cond_mean;            // per-axis conditional mean of z within the box
  Vector cond_var;             // per-axis conditional variance of z within the box
  double mass = 0.0;           // standard-normal mass of the box
};

/// Discrete approximation of a Gaussian or a mixture, with its generating cells.
struct Signature {
  DiscreteDistribution atoms;
  std::vector<SignatureCell> cells;       // empty for unstructured signatures
  std::vector<GridFrame> frames;          // one per source component
  std::vector<double> component_weights;  // source mixture weights
  std::vector<double> component_w2sq;     // exact transport cost per component
  std::vector<double> pruned_w2sq;        // part of component_w2sq from pruned cells
  double pruned_mass = 0.0;               // total (weighted) mass of pruned cells

  int size() const { return atoms.size(); }
  int dim() const { return atoms.dim(); }
  bool has_cells() const { return !cells.empty(); }
};

struct GaussianSignature {
  Signature signature;
  double w2sq_exact = 0.0;
  GridAllocation allocation;
};

/// Tensor-grid signature on the eigenbasis of g.cov. Cells with mass below
/// kTolerances.prune_mass are merged into the nearest kept atom; the cost of
/// that move is included exactly in w2sq_exact.
GaussianSignature signature_of_gaussian(const Gaussian& g, long long budget,
                                        const QuantizerTable& table);

struct MixtureSignature {
  Signature signature;
  double w2_bound = 0.0;  // sqrt(sum_i pi_i w2sq_i)
};

/// Union of per-component grid signatures, atom weights scaled by the mixture weights.
MixtureSignature signature_of_mixture(const GaussianMixture& g, long long budget_per_component,
                                      const QuantizerTable& table);

enum class Activation { kRelu, kTanh };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);

inline double apply_activation(Activation a, double x) {
  return a == Activation::kRelu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

struct ActivationBound {
  double value = 0.0;
  bool refined = false;
  bool missing_cells = false;  // fell back to the global Lipschitz bound
};

/// Upper bound on W2(sigma # source, sigma # signature). With `refine` and ReLU,
/// cells are examined coordinate-wise; otherwise the global Lipschitz constant 1 is used.
ActivationBound activation_signature_w2_bound(const Signature& sig, Activation activation,
                                              const GaussianMixture& source, bool refine);

}  // namespace wassnet

#endif  // WASSNET_QUANTIZER_HPP_
