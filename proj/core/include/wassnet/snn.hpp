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


#ifndef WASSNET_SNN_HPP_
#define WASSNET_SNN_HPP_

#include <cstdint>
#include <variant>
#include <vector>

#include "wassnet/gaussian.hpp"
#include "wassnet/quantizer.hpp"

namespace wassnet {

/// Mean-field Gaussian linear layer: y = s (W x + b), s = 1/sqrt(n_in) under NTK scaling.
struct StochasticLinear {
  Matrix weight_mean;  // n_out x n_in
  Matrix weight_var;   // n_out x n_in, elementwise variances
  Vector bias_mean;
  Vector bias_var;
  bool ntk = false;

  int in_dim() const { return static_cast<int>(weight_mean.cols()); }
  int out_dim() const { return static_cast<int>(weight_mean.rows()); }
  double scale() const;
};

struct DeterministicLinear {
  Matrix weight;
  Vector bias;

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
};

/// Multiplies each unit by an independent Bernoulli(keep_prob) mask. No rescaling.
struct Dropout {
  double keep_prob = 1.0;
};

struct ActivationLayer {
  Activation kind = Activation::kRelu;
};

using Layer = std::variant<StochasticLinear, DeterministicLinear, Dropout, ActivationLayer>;

class SnnModel {
 public:
  SnnModel() = default;
  /// Throws InvalidArgument on broken dimension chains, negative variances,
  /// keep_prob outside (0, 1], adjacent activations or a non-linear final layer.
  SnnModel(int input_dim, std::vector<Layer> layers);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  int input_dim_ = 0;
  int output_dim_ = 0;
  std::vector<Layer> layers_;
};

struct LayerRecord {
  int k = 0;                      // 1-based index of the linear layer
  double spectral_term = 0.0;     // S_k
  double signature_term = 0.0;    // signature error entering layer k
  double compression_term = 0.0;  // compression (and dropout compression) error
  double lipschitz = 1.0;
  double accumulated = 0.0;       // bound after layer k
};

struct BoundLedger {
  int input_count = 0;
  std::vector<LayerRecord> records;
  double bound = 0.0;

  /// Largest absolute deviation between stored and recomputed accumulated values.
  double audit() const;
};

struct PropagationConfig {
  long long signature_budget = 10;  // atoms per mixture component
  int compression_size = 5;         // M
  std::uint64_t seed = 0;
  bool activation_refinement = false;
  const QuantizerTable* table = nullptr;  // nullptr: default_quantizer_table()
  long long atom_cap = 100'000;
  long long dropout_masks = 8;  // masks per atom retained by dropout compression (power of two)
};

struct Propagation {
  GaussianMixture mixture;  // over the stacked outputs, block-major
  BoundLedger ledger;
};

/// sqrt(D) * s * (sqrt(sum var) + ||weight_mean||_2).
double expected_spectral_bound(const StochasticLinear& layer, int D);
/// sqrt(D) * ||weight||_2.
double expected_spectral_bound(const DeterministicLinear& layer, int D);

/// Exact law of the layer output at a fixed stacked input of D blocks of size n_in.
Gaussian push_point_through_stochastic_linear(const Vector& point, const StochasticLinear& layer,
                                              int D);

/// Points are the rows of `points`. Output dimension is D * output_dim, block-major.
Propagation propagate(const SnnModel& model, const Matrix& points, const PropagationConfig& cfg);

/// n_samples x (D * output_dim). Weights and masks are drawn once per sample and shared
/// by all points; sample i uses make_stream(seed, i).
Matrix sample_network(const SnnModel& model, const Matrix& points, int n_samples,
                      std::uint64_t seed);

/// Noise-free forward pass with the mean weights and all units kept.
Matrix mean_forward(const SnnModel& model, const Matrix& points);

}  // namespace wassnet

#endif  // WASSNET_SNN_HPP_
