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


#include "wassnet/snn.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "wassnet/error.hpp"
#include "wassnet/mixture_ops.hpp"
#include "wassnet/transport.hpp"

namespace wassnet {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

bool is_linear(const Layer& l) {
  return std::holds_alternative<StochasticLinear>(l) ||
         std::holds_alternative<DeterministicLinear>(l);
}

std::string where(std::size_t i) { return "layer " + std::to_string(i) + ": "; }

}  // namespace

double StochasticLinear::scale() const {
  return ntk ? 1.0 / std::sqrt(static_cast<double>(in_dim())) : 1.0;
}

SnnModel::SnnModel(int input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ < 1) throw InvalidArgument("model: input_dim must be positive");
  if (layers_.empty() || !is_linear(layers_.back())) {
    throw InvalidArgument("model: the final layer must be linear");
  }
  int width = input_dim_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    if (const auto* s = std::get_if<StochasticLinear>(&layer)) {
      if (s->in_dim() != width) {
        throw InvalidArgument(where(i) + "expects input width " + std::to_string(s->in_dim()) +
                              ", previous width is " + std::to_string(width));
      }
      if (s->weight_var.rows() != s->weight_mean.rows() ||
          s->weight_var.cols() != s->weight_mean.cols() || s->bias_mean.size() != s->out_dim() ||
          s->bias_var.size() != s->out_dim()) {
        throw InvalidArgument(where(i) + "inconsistent parameter shapes");
      }
      if ((s->weight_var.array() < 0.0).any() || (s->bias_var.array() < 0.0).any() ||
          !s->weight_var.allFinite() || !s->bias_var.allFinite() ||
          !s->weight_mean.allFinite() || !s->bias_mean.allFinite()) {
        throw InvalidArgument(where(i) + "variances must be finite and nonnegative");
      }
      width = s->out_dim();
    } else if (const auto* d = std::get_if<DeterministicLinear>(&layer)) {
      if (d->in_dim() != width) {
        throw InvalidArgument(where(i) + "expects input width " + std::to_string(d->in_dim()) +
                              ", previous width is " + std::to_string(width));
      }
      if (d->bias.size() != d->out_dim() || !d->weight.allFinite() || !d->bias.allFinite()) {
        throw InvalidArgument(where(i) + "inconsistent parameter shapes");
      }
      width = d->out_dim();
    } else if (const auto* p = std::get_if<Dropout>(&layer)) {
      if (!(p->keep_prob > 0.0 && p->keep_prob <= 1.0)) {
        throw InvalidArgument(where(i) + "keep_prob must lie in (0, 1]");
      }
    } else if (i > 0 && std::holds_alternative<ActivationLayer>(layers_[i - 1])) {
      throw InvalidArgument(where(i) + "activation layers may not be adjacent");
    }
  }
  output_dim_ = width;
}

double BoundLedger::audit() const {
  double prev = 0.0;
  double worst = 0.0;
  for (const LayerRecord& r : records) {
    const double expect =
        r.spectral_term * (r.lipschitz * prev + r.lipschitz * r.compression_term + r.signature_term);
    worst = std::max(worst, std::abs(expect - r.accumulated));
    prev = r.accumulated;
  }
  worst = std::max(worst, std::abs(prev - bound));
  return worst;
}

double expected_spectral_bound(const StochasticLinear& layer, int D) {
  if (D < 1) throw InvalidArgument("expected_spectral_bound: D must be positive");
  const double frob = std::sqrt(layer.weight_var.sum());
  return std::sqrt(static_cast<double>(D)) * layer.scale() *
         (frob + spectral_norm(layer.weight_mean));
}

double expected_spectral_bound(const DeterministicLinear& layer, int D) {
  if (D < 1) throw InvalidArgument("expected_spectral_bound: D must be positive");
  return std::sqrt(static_cast<double>(D)) * spectral_norm(layer.weight);
}

Gaussian push_point_through_stochastic_linear(const Vector& point, const StochasticLinear& layer,
                                              int D) {
  const int n_in = layer.in_dim();
  const int n_out = layer.out_dim();
  if (D < 1 || point.size() != static_cast<Eigen::Index>(D) * n_in) {
    throw InvalidArgument("push_point: expected a point of dimension " +
                          std::to_string(static_cast<long long>(D) * n_in) + ", got " +
                          std::to_string(point.size()));
  }
  const double s = layer.scale();
  const Eigen::Map<const Matrix> x(point.data(), n_in, D);  // column d is block d
  Matrix mean_blocks = s * (layer.weight_mean * x);
  mean_blocks.colwise() += s * layer.bias_mean;
  Vector mean = Eigen::Map<const Vector>(mean_blocks.data(), mean_blocks.size());

  if (D == 1) {
    Vector var = s * s * (layer.weight_var * x.col(0).cwiseAbs2() + layer.bias_var);
    return Gaussian::diagonal(std::move(mean), std::move(var));
  }
  const bool noiseless = layer.weight_var.isZero(0.0) && layer.bias_var.isZero(0.0);
  if (noiseless) return Gaussian::dirac(std::move(mean));
  const Eigen::Index n = static_cast<Eigen::Index>(D) * n_out;
  Matrix cov = Matrix::Zero(n, n);
  for (int i = 0; i < n_out; ++i) {
    // Gram of the blocks under the variances of row i.
    const Matrix scaled = layer.weight_var.row(i).transpose().asDiagonal() * x;
    Matrix gram = x.transpose() * scaled;
    gram.array() += layer.bias_var(i);
    for (int d = 0; d < D; ++d) {
      for (int e = 0; e < D; ++e) cov(d * n_out + i, e * n_out + i) = s * s * gram(d, e);
    }
  }
  return Gaussian::full(std::move(mean), std::move(cov));
}

namespace {

std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(layer) + 1));
}

Vector stack_points(const Matrix& points) {
  const Matrix t = points.transpose();
  return Eigen::Map<const Vector>(t.data(), t.size());
}

Gaussian affine_image(const Gaussian& g, const DeterministicLinear& layer, int D) {
  const int n_in = layer.in_dim();
  const int n_out = layer.out_dim();
  const Eigen::Map<const Matrix> m(g.mean().data(), n_in, D);
  Matrix mean_blocks = layer.weight * m;
  mean_blocks.colwise() += layer.bias;
  Vector mean = Eigen::Map<const Vector>(mean_blocks.data(), mean_blocks.size());
  if (g.is_dirac()) return Gaussian::dirac(std::move(mean));
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(D) * n_out, static_cast<Eigen::Index>(D) * n_in);
  for (int d = 0; d < D; ++d) a.block(d * n_out, d * n_in, n_out, n_in) = layer.weight;
  Matrix cov = g.is_diagonal() ? Matrix(a * g.variances().asDiagonal() * a.transpose())
                               : Matrix(a * g.covariance() * a.transpose());
  return Gaussian::full(std::move(mean), std::move(cov));
}

struct State {
  bool discrete = true;
  DiscreteDistribution atoms;
  GaussianMixture mixture;
  double carried = 0.0;      // bound at the last linear layer
  double compression = 0.0;  // pending compression terms
  double signature = 0.0;    // pending signature terms
};

class Propagator {
 public:
  Propagator(const SnnModel& model, const Matrix& points, const PropagationConfig& cfg)
      : model_(model), cfg_(cfg), D_(static_cast<int>(points.rows())) {
    if (points.rows() < 1) throw InvalidArgument("propagate: at least one input point required");
    if (points.cols() != model.input_dim()) {
      throw InvalidArgument("propagate: points have dimension " + std::to_string(points.cols()) +
                            ", model expects " + std::to_string(model.input_dim()));
    }
    if (cfg.signature_budget < 1 || cfg.compression_size < 1) {
      throw InvalidArgument("propagate: signature budget and compression size must be positive");
    }
    if (cfg.dropout_masks < 1 || (cfg.dropout_masks & (cfg.dropout_masks - 1)) != 0) {
      throw InvalidArgument("propagate: dropout_masks must be a power of two");
    }
    table_ = cfg.table ? cfg.table : &default_quantizer_table();
    state_.atoms = DiscreteDistribution(stack_points(points), {1.0});
    ledger_.input_count = D_;
  }

  Propagation run() {
    const auto& layers = model_.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      index_ = i;
      std::visit(Overloaded{
                     [&](const StochasticLinear& l) { stochastic(l); },
                     [&](const DeterministicLinear& l) { deterministic(l); },
                     [&](const Dropout& l) { dropout(l); },
                     [&](const ActivationLayer& l) { activation(l.kind); },
                 },
                 layers[i]);
    }
    ledger_.bound = state_.carried;
    return {std::move(state_.mixture), std::move(ledger_)};
  }

 private:
  // Compress the current mixture and replace it by a signature, optionally mapped by sigma.
  void to_atoms(const Activation* sigma) {
    const CompressionResult c =
        compress_gmm(state_.mixture, cfg_.compression_size, layer_seed(cfg_.seed, index_));
    const long long worst = static_cast<long long>(c.compressed.size()) * cfg_.signature_budget;
    if (worst > cfg_.atom_cap) {
      throw CapacityError("propagate: " + std::to_string(worst) + " atoms would exceed the cap of " +
                          std::to_string(cfg_.atom_cap) + "; reduce the signature budget or M");
    }
    MixtureSignature sig = signature_of_mixture(c.compressed, cfg_.signature_budget, *table_);
    double delta = sig.w2_bound;
    if (sigma) {
      delta = activation_signature_w2_bound(sig.signature, *sigma, c.compressed,
                                            cfg_.activation_refinement)
                  .value;
      sig.signature.atoms.locations = sig.signature.atoms.locations.unaryExpr(
          [s = *sigma](double v) { return apply_activation(s, v); });
    }
    state_.compression += c.w2_bound;
    state_.signature += delta;
    state_.atoms = std::move(sig.signature.atoms);
    state_.mixture = GaussianMixture();
    state_.discrete = true;
  }

  void record(double spectral) {
    LayerRecord r;
    r.k = static_cast<int>(ledger_.records.size()) + 1;
    r.spectral_term = spectral;
    r.signature_term = state_.signature;
    r.compression_term = state_.compression;
    r.lipschitz = 1.0;
    r.accumulated = r.spectral_term *
                    (r.lipschitz * state_.carried + r.lipschitz * r.compression_term + r.signature_term);
    if (!std::isfinite(r.accumulated)) {
      throw NumericalError("propagate: non-finite bound at linear layer " + std::to_string(r.k));
    }
    ledger_.records.push_back(r);
    state_.carried = r.accumulated;
    state_.compression = 0.0;
    state_.signature = 0.0;
  }

  template <class F>
  void push_atoms(F&& to_gaussian) {
    std::vector<double> w;
    std::vector<Gaussian> comps;
    for (int a = 0; a < state_.atoms.size(); ++a) {
      if (state_.atoms.weights[a] <= 0.0) continue;
      w.push_back(state_.atoms.weights[a]);
      comps.push_back(to_gaussian(Vector(state_.atoms.atom(a))));
    }
    state_.mixture = GaussianMixture(std::move(w), std::move(comps));
    state_.atoms = DiscreteDistribution();
    state_.discrete = false;
  }

  void stochastic(const StochasticLinear& l) {
    if (!state_.discrete) to_atoms(nullptr);
    push_atoms([&](const Vector& x) { return push_point_through_stochastic_linear(x, l, D_); });
    record(expected_spectral_bound(l, D_));
  }

  void deterministic(const DeterministicLinear& l) {
    if (state_.discrete) {
      const StochasticLinear as_stochastic{l.weight, Matrix::Zero(l.out_dim(), l.in_dim()), l.bias,
                                           Vector::Zero(l.out_dim()), false};
      push_atoms(
          [&](const Vector& x) { return push_point_through_stochastic_linear(x, as_stochastic, D_); });
    } else {
      std::vector<Gaussian> comps;
      for (const Gaussian& g : state_.mixture.components()) comps.push_back(affine_image(g, l, D_));
      state_.mixture = GaussianMixture(state_.mixture.weights(), std::move(comps));
    }
    record(expected_spectral_bound(l, D_));
  }

  void dropout(const Dropout& l) {
    if (!state_.discrete) to_atoms(nullptr);
    const long long cap = std::min<long long>(
        cfg_.atom_cap, static_cast<long long>(state_.atoms.size()) * cfg_.dropout_masks);
    try {
      state_.atoms = expand_dropout(state_.atoms, l.keep_prob, cap, D_);
      return;
    } catch (const CapacityError&) {
    }
    const long long units = state_.atoms.dim() / D_;
    long long masks = cfg_.dropout_masks;
    while (masks > 1 && (units < 62 && masks > (1LL << units))) masks /= 2;
    DropoutCompression c = compress_dropout(state_.atoms, l.keep_prob, masks, D_);
    if (c.compressed.size() > cfg_.atom_cap) {
      throw CapacityError("propagate: dropout support of " + std::to_string(c.compressed.size()) +
                          " atoms exceeds the cap of " + std::to_string(cfg_.atom_cap) +
                          "; reduce dropout_masks, the signature budget or M");
    }
    state_.compression += c.w2_bound;
    state_.atoms = std::move(c.compressed);
  }

  void activation(Activation kind) {
    if (!state_.discrete) {
      to_atoms(&kind);
      return;
    }
    state_.atoms.locations =
        state_.atoms.locations.unaryExpr([kind](double v) { return apply_activation(kind, v); });
  }

  const SnnModel& model_;
  const PropagationConfig& cfg_;
  const QuantizerTable* table_ = nullptr;
  int D_;
  std::size_t index_ = 0;
  State state_;
  BoundLedger ledger_;
};

}  // namespace

Propagation propagate(const SnnModel& model, const Matrix& points, const PropagationConfig& cfg) {
  return Propagator(model, points, cfg).run();
}

Matrix sample_network(const SnnModel& model, const Matrix& points, int n_samples,
                      std::uint64_t seed) {
  if (n_samples < 1) throw InvalidArgument("sample_network: n_samples must be positive");
  if (points.rows() < 1 || points.cols() != model.input_dim()) {
    throw InvalidArgument("sample_network: points do not match the model input dimension");
  }
  const Eigen::Index D = points.rows();
  Matrix out(n_samples, D * model.output_dim());
  std::normal_distribution<double> normal;
  for (int s = 0; s < n_samples; ++s) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(s));
    Matrix h = points;  // D x width
    for (const Layer& layer : model.layers()) {
      std::visit(Overloaded{
                     [&](const StochasticLinear& l) {
                       Matrix w(l.out_dim(), l.in_dim());
                       for (Eigen::Index c = 0; c < w.cols(); ++c) {
                         for (Eigen::Index r = 0; r < w.rows(); ++r) {
                           w(r, c) = l.weight_mean(r, c) + std::sqrt(l.weight_var(r, c)) * normal(rng);
                         }
                       }
                       Vector b(l.out_dim());
                       for (Eigen::Index r = 0; r < b.size(); ++r) {
                         b(r) = l.bias_mean(r) + std::sqrt(l.bias_var(r)) * normal(rng);
                       }
                       Matrix next = h * w.transpose();
                       next.rowwise() += b.transpose();
                       h = l.scale() * next;
                     },
                     [&](const DeterministicLinear& l) {
                       Matrix next = h * l.weight.transpose();
                       next.rowwise() += l.bias.transpose();
                       h = std::move(next);
                     },
                     [&](const Dropout& l) {
                       std::bernoulli_distribution keep(l.keep_prob);
                       for (Eigen::Index u = 0; u < h.cols(); ++u) {
                         if (!keep(rng)) h.col(u).setZero();
                       }
                     },
                     [&](const ActivationLayer& l) {
                       h = h.unaryExpr([k = l.kind](double v) { return apply_activation(k, v); });
                     },
                 },
                 layer);
    }
    const Matrix t = h.transpose();
    out.row(s) = Eigen::Map<const Vector>(t.data(), t.size()).transpose();
  }
  return out;
}

Matrix mean_forward(const SnnModel& model, const Matrix& points) {
  if (points.cols() != model.input_dim()) {
    throw InvalidArgument("mean_forward: points do not match the model input dimension");
  }
  Matrix h = points;
  for (const Layer& layer : model.layers()) {
    std::visit(Overloaded{
                   [&](const StochasticLinear& l) {
                     Matrix next = h * l.weight_mean.transpose();
                     next.rowwise() += l.bias_mean.transpose();
                     h = l.scale() * next;
                   },
                   [&](const DeterministicLinear& l) {
                     Matrix next = h * l.weight.transpose();
                     next.rowwise() += l.bias.transpose();
                     h = std::move(next);
                   },
                   [&](const Dropout&) {},
                   [&](const ActivationLayer& l) {
                     h = h.unaryExpr([k = l.kind](double v) { return apply_activation(k, v); });
                   },
               },
               layer);
  }
  return h;
}

}  // namespace wassnet
