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


#include "wassnet/prior_tune.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>

#include "wassnet/error.hpp"
#include "wassnet/transport.hpp"

namespace wassnet {

namespace {

constexpr const char* kGpGrammar = "expected rbf:ls=<float>,var=<float>";

double parse_positive(const std::string& text, const std::string& key) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty() || !std::isfinite(v) || v <= 0.0) {
    throw ParseError("gp." + key, "'" + text + "' is not a positive number; " + kGpGrammar);
  }
  return v;
}

}  // namespace

RbfKernel parse_gp_spec(const std::string& spec) {
  const std::string prefix = "rbf:";
  if (spec.rfind(prefix, 0) != 0) throw ParseError("gp", "unknown kernel in '" + spec + "'; " + kGpGrammar);
  RbfKernel k;
  bool has_ls = false;
  bool has_var = false;
  std::stringstream rest(spec.substr(prefix.size()));
  std::string item;
  while (std::getline(rest, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParseError("gp", "missing '=' in '" + item + "'; " + kGpGrammar);
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "ls" && !has_ls) {
      k.lengthscale = parse_positive(value, key);
      has_ls = true;
    } else if (key == "var" && !has_var) {
      k.signal_variance = parse_positive(value, key);
      has_var = true;
    } else {
      throw ParseError("gp", "unexpected key '" + key + "'; " + kGpGrammar);
    }
  }
  if (!has_ls || !has_var) throw ParseError("gp", std::string("both ls and var are required; ") + kGpGrammar);
  return k;
}

std::string format_gp_spec(const RbfKernel& k) {
  std::ostringstream os;
  os.precision(17);
  os << "rbf:ls=" << k.lengthscale << ",var=" << k.signal_variance;
  return os.str();
}

Gaussian gp_realize(const GpTarget& target) {
  const Eigen::Index n = target.points.rows();
  if (n < 1) throw InvalidArgument("gp_realize: at least one evaluation point required");
  const double ell2 = target.kernel.lengthscale * target.kernel.lengthscale;
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double d2 = (target.points.row(i) - target.points.row(j)).squaredNorm();
      k(i, j) = k(j, i) = target.kernel.signal_variance * std::exp(-d2 / (2.0 * ell2));
    }
  }
  double jitter = 1e-10;
  for (int attempt = 0; attempt <= 3; ++attempt, jitter *= 10.0) {
    Matrix kj = k;
    kj.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(kj);
    if (llt.info() == Eigen::Success) return Gaussian::full(Vector::Zero(n), std::move(kj));
  }
  throw NumericalError("gp_realize: Cholesky failed with jitter up to 1e-7", k);
}

namespace {

template <class F>
void for_each_stochastic(const SnnModel& m, F&& f) {
  int index = 0;
  for (std::size_t i = 0; i < m.layers().size(); ++i) {
    if (const auto* s = std::get_if<StochasticLinear>(&m.layers()[i])) f(i, index++, *s);
  }
}

std::size_t param_count(const SnnModel& m, Granularity g) {
  std::size_t n = 0;
  for_each_stochastic(m, [&](std::size_t, int, const StochasticLinear& s) {
    n += g == Granularity::kPerLayer ? 2 : static_cast<std::size_t>(s.weight_var.size() + s.bias_var.size());
  });
  return n;
}

double safe_log(double v, const std::string& what) {
  if (!(v > 0.0)) throw InvalidArgument("prior params: " + what + " has zero variance; log undefined");
  return std::log(v);
}

}  // namespace

PriorParams params_from_model(const SnnModel& tmpl, Granularity granularity) {
  PriorParams p;
  p.granularity = granularity;
  for_each_stochastic(tmpl, [&](std::size_t i, int, const StochasticLinear& s) {
    const std::string tag = "layer " + std::to_string(i);
    if (granularity == Granularity::kPerLayer) {
      p.log_variances.push_back(safe_log(s.weight_var.mean(), tag + " weights"));
      p.log_variances.push_back(safe_log(s.bias_var.mean(), tag + " biases"));
      return;
    }
    for (Eigen::Index r = 0; r < s.weight_var.rows(); ++r) {
      for (Eigen::Index c = 0; c < s.weight_var.cols(); ++c) {
        p.log_variances.push_back(safe_log(s.weight_var(r, c), tag + " weights"));
      }
    }
    for (Eigen::Index r = 0; r < s.bias_var.size(); ++r) {
      p.log_variances.push_back(safe_log(s.bias_var(r), tag + " biases"));
    }
  });
  return p;
}

SnnModel instantiate(const SnnModel& tmpl, const PriorParams& params) {
  if (params.log_variances.size() != param_count(tmpl, params.granularity)) {
    throw InvalidArgument("instantiate: expected " +
                          std::to_string(param_count(tmpl, params.granularity)) +
                          " log-variances, got " + std::to_string(params.log_variances.size()));
  }
  std::vector<Layer> layers = tmpl.layers();
  std::size_t at = 0;
  for (Layer& layer : layers) {
    auto* s = std::get_if<StochasticLinear>(&layer);
    if (!s) continue;
    if (params.granularity == Granularity::kPerLayer) {
      s->weight_var.setConstant(std::exp(params.log_variances[at]));
      s->bias_var.setConstant(std::exp(params.log_variances[at + 1]));
      at += 2;
      continue;
    }
    for (Eigen::Index r = 0; r < s->weight_var.rows(); ++r) {
      for (Eigen::Index c = 0; c < s->weight_var.cols(); ++c) {
        s->weight_var(r, c) = std::exp(params.log_variances[at++]);
      }
    }
    for (Eigen::Index r = 0; r < s->bias_var.size(); ++r) s->bias_var(r) = std::exp(params.log_variances[at++]);
  }
  return SnnModel(tmpl.input_dim(), std::move(layers));
}

std::string param_name(const SnnModel& tmpl, const PriorParams& params, std::size_t i) {
  std::size_t at = 0;
  std::string name;
  for_each_stochastic(tmpl, [&](std::size_t layer, int, const StochasticLinear& s) {
    const std::size_t nw = params.granularity == Granularity::kPerLayer ? 1 : s.weight_var.size();
    const std::size_t nb = params.granularity == Granularity::kPerLayer ? 1 : s.bias_var.size();
    if (name.empty() && i < at + nw) name = "layer " + std::to_string(layer) + " weights";
    else if (name.empty() && i < at + nw + nb) name = "layer " + std::to_string(layer) + " biases";
    at += nw + nb;
  });
  return name.empty() ? "parameter " + std::to_string(i) : name;
}

namespace {

void check_template(const SnnModel& tmpl, const GpTarget& target) {
  if (tmpl.output_dim() != 1) throw InvalidArgument("prior tuning: the template must have one output");
  if (target.points.cols() != tmpl.input_dim()) {
    throw InvalidArgument("prior tuning: evaluation points do not match the template input");
  }
  for_each_stochastic(tmpl, [](std::size_t i, int, const StochasticLinear& s) {
    if (!s.weight_mean.isZero(0.0) || !s.bias_mean.isZero(0.0)) {
      throw InvalidArgument("prior tuning: stochastic layer " + std::to_string(i) + " is not zero-mean");
    }
  });
}

LossComponents loss_of(const SnnModel& model, const GpTarget& target, const PropagationConfig& cfg,
                       double beta) {
  const Propagation p = propagate(model, target.points, cfg);
  const GaussianMixture gp(gp_realize(target));
  LossComponents out;
  out.mw2_term = mw2(p.mixture, gp).distance;
  out.bound_term = p.ledger.bound;
  out.loss = out.mw2_term + beta * out.bound_term;
  return out;
}

}  // namespace

LossComponents tune_loss(const PriorParams& params, const SnnModel& tmpl, const GpTarget& target,
                         const PropagationConfig& cfg, double beta) {
  check_template(tmpl, target);
  if (!(beta >= 0.0)) throw InvalidArgument("tune_loss: beta must be nonnegative");
  return loss_of(instantiate(tmpl, params), target, cfg, beta);
}

namespace {

// Past the starting point a numerical breakdown counts as an infinitely bad candidate.
LossComponents guarded_loss(const PriorParams& params, const SnnModel& tmpl, const GpTarget& target,
                            const PropagationConfig& cfg, double beta) {
  try {
    return tune_loss(params, tmpl, target, cfg, beta);
  } catch (const NumericalError&) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf, inf};
  }
}

}  // namespace

double empirical_relative_w2(const SnnModel& model, const GpTarget& target, int n_samples,
                             std::uint64_t seed) {
  const Matrix xs = sample_network(model, target.points, n_samples, seed);
  const GaussianMixture gp(gp_realize(target));
  Rng rng = make_stream(seed, 0xC0FFEEULL);
  const Matrix ys = gp.sample(n_samples, rng);
  return relative_w2(empirical_w2(xs, ys), gp);
}

TuneReport tune(const SnnModel& tmpl, const GpTarget& target, const PropagationConfig& cfg,
                const TuneOptions& opts) {
  check_template(tmpl, target);
  if (opts.steps < 1) throw InvalidArgument("tune: steps must be at least 1");
  if (opts.batch < 1 || opts.batch > target.points.rows()) {
    throw InvalidArgument("tune: batch must lie in [1, number of evaluation points]");
  }
  if (!(opts.beta >= 0.0) || !(opts.step_size > 0.0) || !(opts.fd_step > 0.0) || !(opts.max_update > 0.0)) {
    throw InvalidArgument("tune: beta, step size, finite-difference step and max update must be positive");
  }

  TuneReport report;
  report.options = opts;
  report.initial = params_from_model(tmpl, Granularity::kPerLayer);
  PriorParams params = report.initial;

  report.initial_full = tune_loss(params, tmpl, target, cfg, opts.beta);
  if (!std::isfinite(report.initial_full.loss)) {
    for (std::size_t i = 0; i < params.log_variances.size(); ++i) {
      if (!std::isfinite(std::exp(params.log_variances[i]))) {
        throw NumericalError("tune: non-finite loss at initialization (" + param_name(tmpl, params, i) + ")");
      }
    }
    throw NumericalError("tune: non-finite loss at initialization");
  }

  const Eigen::Index n_points = target.points.rows();
  double lr = opts.step_size;
  for (int step = 0; step < opts.steps; ++step) {
    Rng rng = make_stream(opts.seed, static_cast<std::uint64_t>(step));
    std::vector<Eigen::Index> idx(n_points);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(opts.batch);
    std::sort(idx.begin(), idx.end());
    GpTarget sub{target.kernel, Matrix(opts.batch, target.points.cols())};
    for (int r = 0; r < opts.batch; ++r) sub.points.row(r) = target.points.row(idx[r]);

    PropagationConfig step_cfg = cfg;
    step_cfg.seed = cfg.seed + static_cast<std::uint64_t>(step);

    const LossComponents here = guarded_loss(params, tmpl, sub, step_cfg, opts.beta);
    report.history.push_back({here.loss, here.mw2_term, here.bound_term});

    std::vector<double> grad(params.log_variances.size(), 0.0);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      PriorParams up = params;
      PriorParams down = params;
      up.log_variances[i] += opts.fd_step;
      down.log_variances[i] -= opts.fd_step;
      const double lu = guarded_loss(up, tmpl, sub, step_cfg, opts.beta).loss;
      const double ld = guarded_loss(down, tmpl, sub, step_cfg, opts.beta).loss;
      const double g = (lu - ld) / (2.0 * opts.fd_step);
      grad[i] = std::isfinite(g) ? g : 0.0;
    }
    for (std::size_t i = 0; i < grad.size(); ++i) {
      params.log_variances[i] -= std::clamp(lr * grad[i], -opts.max_update, opts.max_update);
    }
    lr *= opts.decay;
  }

  report.final_full = guarded_loss(params, tmpl, target, cfg, opts.beta);
  report.descended = params;
  report.descended_full = report.final_full;
  if (!(report.final_full.loss <= report.initial_full.loss)) {
    report.reverted = true;
    params = report.initial;
    report.final_full = report.initial_full;
  }
  report.final_params = params;

  const GaussianMixture gp(gp_realize(target));
  report.final_relative_formal =
      relative_w2(report.final_full.mw2_term + report.final_full.bound_term, gp);
  if (opts.eval_samples > 0) {
    report.initial_relative_empirical =
        empirical_relative_w2(tmpl, target, opts.eval_samples, opts.seed);
    report.final_relative_empirical = empirical_relative_w2(
        instantiate(tmpl, params), target, opts.eval_samples, opts.seed);
  }
  return report;
}

}  // namespace wassnet
