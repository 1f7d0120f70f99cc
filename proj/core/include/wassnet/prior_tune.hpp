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


#ifndef WASSNET_PRIOR_TUNE_HPP_
#define WASSNET_PRIOR_TUNE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "wassnet/gaussian.hpp"
#include "wassnet/snn.hpp"

namespace wassnet {

struct RbfKernel {
  double lengthscale = 1.0;
  double signal_variance = 1.0;
};

/// Parses "rbf:ls=<float>,var=<float>". Throws ParseError with the grammar on failure.
RbfKernel parse_gp_spec(const std::string& spec);
std::string format_gp_spec(const RbfKernel& k);

/// Zero-mean single-output GP evaluated at the rows of `points`.
struct GpTarget {
  RbfKernel kernel;
  Matrix points;
};

/// N(0, K + jitter I). Jitter starts at 1e-10 and grows tenfold, at most three times,
/// until the Cholesky factorization succeeds; NumericalError otherwise.
Gaussian gp_realize(const GpTarget& target);

enum class Granularity { kPerLayer, kPerParameter };

/// Log-variances of the stochastic layers, in layer order. Per layer: one entry for the
/// weights and one for the biases; per parameter: every weight (row-major) then every bias.
struct PriorParams {
  Granularity granularity = Granularity::kPerLayer;
  std::vector<double> log_variances;
};

/// Reads the current variances of `tmpl`. Per-layer groups use the mean variance of the group.
PriorParams params_from_model(const SnnModel& tmpl, Granularity granularity);
/// Copy of `tmpl` with variances exp(params).
SnnModel instantiate(const SnnModel& tmpl, const PriorParams& params);
/// Human-readable name of parameter slot i ("layer 2 weights", ...).
std::string param_name(const SnnModel& tmpl, const PriorParams& params, std::size_t i);

struct LossComponents {
  double loss = 0.0;
  double mw2_term = 0.0;    // MW2(q_nn(X), GP(X))
  double bound_term = 0.0;  // ledger bound
};

LossComponents tune_loss(const PriorParams& params, const SnnModel& tmpl, const GpTarget& target,
                         const PropagationConfig& cfg, double beta);

struct TuneOptions {
  double beta = 0.01;
  int steps = 50;
  double step_size = 0.05;
  double decay = 0.99;
  int batch = 5;
  std::uint64_t seed = 0;
  double fd_step = 1e-4;
  double max_update = 0.5;  // per-step cap on each log-variance change
  int eval_samples = 1000;  // 0 skips the empirical estimates
};

struct TuneStep {
  double loss = 0.0;
  double mw2_term = 0.0;
  double bound_term = 0.0;
};

struct TuneReport {
  std::vector<TuneStep> history;  // batch loss at the start of each step
  PriorParams initial;
  PriorParams final_params;
  LossComponents initial_full;  // full point set
  LossComponents final_full;
  PriorParams descended;          // where descent ended, kept even when reverted
  LossComponents descended_full;
  bool reverted = false;  // descent ended above the start; initial params returned
  double final_relative_formal = 0.0;
  double final_relative_empirical = -1.0;    // negative when not computed
  double initial_relative_empirical = -1.0;
  TuneOptions options;
};

/// Mini-batch gradient descent on the log-variances with central finite differences.
/// Seeds inside propagation are fixed within a step.
TuneReport tune(const SnnModel& tmpl, const GpTarget& target, const PropagationConfig& cfg,
                const TuneOptions& opts);

/// Relative empirical W2 between network samples and GP samples at target.points.
double empirical_relative_w2(const SnnModel& model, const GpTarget& target, int n_samples,
                             std::uint64_t seed);

}  // namespace wassnet

#endif  // WASSNET_PRIOR_TUNE_HPP_
