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


#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "wassnet/error.hpp"
#include "wassnet/io.hpp"
#include "wassnet/prior_tune.hpp"
#include "wassnet/quantizer.hpp"
#include "wassnet/snn.hpp"
#include "wassnet/transport.hpp"

namespace wassnet::cli {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct QuantizerBuildArgs {
  int max_n = QuantizerTable::kDefaultMaxSize;
  double tol = kTolerances.quantizer_tol;
  std::string out;
};

struct ApproximateArgs {
  std::string model, points, table, out_gmm, out_ledger;
  long long budget = 10;
  int M = 5;
  std::uint64_t seed = 0;
  bool refine = false;
  long long dropout_masks = 8;
  long long atom_cap = 100'000;
};

struct EmpiricalArgs {
  std::string model, points, gmm, ledger;
  int samples = 1000;
  std::uint64_t seed = 0;
};

struct Mw2Args {
  std::string gmm_a, gmm_b, plan;
};

struct TuneArgs {
  std::string arch, gp, points, out, out_model, table;
  double beta = 0.01;
  int steps = 50;
  int batch = 5;
  std::uint64_t seed = 0;
  double step_size = 0.05;
  long long budget = 10;
  int M = 1;
  int eval_samples = 1000;
};

struct ReportArgs {
  std::vector<std::string> ledgers;
  std::string format = "md";
};

QuantizerTable load_table(const std::string& flag) {
  std::string path = flag;
  if (path.empty()) {
    if (const char* env = std::getenv("WASSNET_TABLE")) path = env;
  }
  if (path.empty()) return default_quantizer_table();
  return io::parse_table(io::read_text(path));
}

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

int cmd_quantizer_build(const QuantizerBuildArgs& a, std::ostream& out) {
  if (a.max_n < 1) throw InvalidArgument("--max-n must be at least 1");
  if (!(a.tol > 0.0)) throw InvalidArgument("--tol must be positive");
  const QuantizerTable table = QuantizerTable::build(a.max_n, a.tol);
  io::write_text(a.out, io::dump_table(table));
  out << "wrote " << table.max_size() << " quantizers to " << a.out << "\n";
  return kOk;
}

int cmd_approximate(const ApproximateArgs& a, std::ostream& out) {
  const SnnModel model = io::parse_model(io::read_text(a.model));
  const Matrix points = io::parse_points(io::read_text(a.points));
  const QuantizerTable table = load_table(a.table);
  PropagationConfig cfg;
  cfg.signature_budget = a.budget;
  cfg.compression_size = a.M;
  cfg.seed = a.seed;
  cfg.activation_refinement = a.refine;
  cfg.table = &table;
  cfg.dropout_masks = a.dropout_masks;
  cfg.atom_cap = a.atom_cap;
  const Propagation p = propagate(model, points, cfg);

  io::LedgerDocument doc;
  doc.ledger = p.ledger;
  doc.model = stem(a.model);
  doc.budget = a.budget;
  doc.M = a.M;
  doc.relative_bound = mixture_second_moment(p.mixture) > 0.0 ? relative_w2(p.ledger.bound, p.mixture)
                       : p.ledger.bound == 0.0                 ? 0.0
                                                               : INFINITY;
  io::write_text(a.out_gmm, io::dump_gmm(p.mixture));
  io::write_text(a.out_ledger, io::dump_ledger(doc));
  out << "components " << p.mixture.size() << "\n";
  out << "bound " << num(p.ledger.bound) << "\n";
  out << "relative_bound " << num(doc.relative_bound) << "\n";
  return kOk;
}

int cmd_empirical(const EmpiricalArgs& a, std::ostream& out) {
  if (a.samples < 1) throw InvalidArgument("--samples must be at least 1");
  const SnnModel model = io::parse_model(io::read_text(a.model));
  const Matrix points = io::parse_points(io::read_text(a.points));
  const GaussianMixture gmm = io::parse_gmm(io::read_text(a.gmm));
  const long long dim = static_cast<long long>(points.rows()) * model.output_dim();
  if (gmm.dim() != dim) {
    throw InvalidArgument("gmm dimension " + std::to_string(gmm.dim()) + " differs from D * output_dim = " +
                          std::to_string(dim));
  }
  const long long entries = static_cast<long long>(a.samples) * a.samples;
  if (entries > kDefaultMaxCostEntries) {
    throw CapacityError("--samples " + std::to_string(a.samples) + " exceeds the sample cap of " +
                        std::to_string(static_cast<long long>(std::sqrt(double(kDefaultMaxCostEntries)))) +
                        "; reduce --samples");
  }
  const Matrix xs = sample_network(model, points, a.samples, a.seed);
  Rng rng = make_stream(a.seed, 0x6A3ULL);
  const Matrix ys = gmm.sample(a.samples, rng);
  const double w2 = empirical_w2(xs, ys);
  const double second = mixture_second_moment(gmm);
  const double rel = second > 0.0 ? relative_w2(w2, gmm) : 0.0;
  out << "empirical_w2 " << num(w2) << "\n";
  out << "relative_w2 " << num(rel) << "\n";
  if (!a.ledger.empty()) {
    io::LedgerDocument doc = io::parse_ledger(io::read_text(a.ledger));
    doc.empirical_relative = rel;
    io::write_text(a.ledger, io::dump_ledger(doc));
  }
  return kOk;
}

int cmd_mw2(const Mw2Args& a, std::ostream& out) {
  const GaussianMixture p = io::parse_gmm(io::read_text(a.gmm_a));
  const GaussianMixture q = io::parse_gmm(io::read_text(a.gmm_b));
  if (p.dim() != q.dim()) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(p.dim()) + " vs " + std::to_string(q.dim()));
  }
  const Mw2Result r = mw2(p, q);
  out << "mw2 " << num(r.distance) << "\n";
  if (!a.plan.empty()) io::write_text(a.plan, io::dump_plan(r.plan));
  return kOk;
}

int cmd_tune_prior(const TuneArgs& a, std::ostream& out) {
  const RbfKernel kernel = parse_gp_spec(a.gp);
  const SnnModel arch = io::parse_model(io::read_text(a.arch));
  const Matrix points = io::parse_points(io::read_text(a.points));
  const QuantizerTable table = load_table(a.table);
  PropagationConfig cfg;
  cfg.signature_budget = a.budget;
  cfg.compression_size = a.M;
  cfg.seed = a.seed;
  cfg.table = &table;
  TuneOptions opts;
  opts.beta = a.beta;
  opts.steps = a.steps;
  opts.batch = a.batch;
  opts.seed = a.seed;
  opts.step_size = a.step_size;
  opts.eval_samples = a.eval_samples;
  const TuneReport report = tune(arch, GpTarget{kernel, points}, cfg, opts);
  io::write_text(a.out, io::dump_tune_report(report, arch, kernel));
  std::string model_out = a.out_model;
  if (model_out.empty()) {
    std::filesystem::path p(a.out);
    model_out = (p.parent_path() / (p.stem().string() + ".model.json")).string();
  }
  io::write_text(model_out, io::dump_model(instantiate(arch, report.final_params)));
  out << "initial_loss " << num(report.initial_full.loss) << "\n";
  out << "final_loss " << num(report.final_full.loss) << "\n";
  if (report.reverted) out << "reverted to initial parameters\n";
  out << "wrote " << a.out << " and " << model_out << "\n";
  return kOk;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  if (a.format != "md") throw InvalidArgument("--format supports only md");
  out << "| model | D | budget | M | empirical | formal |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const std::string& path : a.ledgers) {
    const io::LedgerDocument doc = io::parse_ledger(io::read_text(path));
    out << "| " << doc.model << " | " << doc.ledger.input_count << " | " << doc.budget << " | " << doc.M
        << " | " << (doc.empirical_relative ? short_num(*doc.empirical_relative) : std::string("-"))
        << " | " << short_num(doc.relative_bound) << " |\n";
  }
  return kOk;
}

template <class F>
int guarded(F&& f, std::ostream& err) {
  try {
    return f();
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const CapacityError& e) {
    err << "capacity exceeded: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian-mixture approximations of stochastic networks with W2 error bounds", "wassnet"};
  app.require_subcommand(1);

  QuantizerBuildArgs qb;
  auto* build = app.add_subcommand("quantizer-build", "Build the optimal 1-D quantizer table");
  build->add_option("--max-n", qb.max_n, "Largest quantizer size")->capture_default_str();
  build->add_option("--tol", qb.tol, "Fixed-point tolerance")->capture_default_str();
  build->add_option("--out", qb.out, "Output JSON path")->required();

  ApproximateArgs ap;
  auto* approx = app.add_subcommand("approximate", "Approximate a network by a Gaussian mixture");
  approx->add_option("--model", ap.model, "Model JSON")->required();
  approx->add_option("--points", ap.points, "Input points (CSV or JSON)")->required();
  approx->add_option("--budget", ap.budget, "Signature size per component")->capture_default_str();
  approx->add_option("--M", ap.M, "Compression size")->capture_default_str();
  approx->add_option("--seed", ap.seed, "Seed")->capture_default_str();
  approx->add_option("--table", ap.table, "Quantizer table JSON (default: $WASSNET_TABLE or built in)");
  approx->add_option("--out-gmm", ap.out_gmm, "Output mixture JSON")->required();
  approx->add_option("--out-ledger", ap.out_ledger, "Output ledger JSON")->required();
  approx->add_flag("--refine", ap.refine, "Per-cell ReLU refinement of the signature term");
  approx->add_option("--dropout-masks", ap.dropout_masks, "Masks per atom kept by dropout compression")
      ->capture_default_str();
  approx->add_option("--atom-cap", ap.atom_cap, "Hard cap on atoms per layer")->capture_default_str();

  EmpiricalArgs em;
  auto* emp = app.add_subcommand("empirical", "Empirical W2 between network samples and a mixture");
  emp->add_option("--model", em.model, "Model JSON")->required();
  emp->add_option("--points", em.points, "Input points (CSV or JSON)")->required();
  emp->add_option("--gmm", em.gmm, "Mixture JSON")->required();
  emp->add_option("--samples", em.samples, "Samples per side")->capture_default_str();
  emp->add_option("--seed", em.seed, "Seed")->capture_default_str();
  emp->add_option("--ledger", em.ledger, "Ledger JSON to annotate with the empirical value");

  Mw2Args mw;
  auto* mwc = app.add_subcommand("mw2", "MW2 distance between two mixtures");
  mwc->add_option("--gmm-a", mw.gmm_a, "First mixture JSON")->required();
  mwc->add_option("--gmm-b", mw.gmm_b, "Second mixture JSON")->required();
  mwc->add_option("--plan", mw.plan, "Optional output path for the transport plan");

  TuneArgs tu;
  auto* tune_cmd = app.add_subcommand("tune-prior", "Fit a mean-field prior to an RBF Gaussian process");
  tune_cmd->add_option("--arch", tu.arch, "Template model JSON (zero-mean stochastic layers)")->required();
  tune_cmd->add_option("--gp", tu.gp, "rbf:ls=<float>,var=<float>")->required();
  tune_cmd->add_option("--points", tu.points, "Evaluation points (CSV or JSON)")->required();
  tune_cmd->add_option("--beta", tu.beta, "Weight of the bound term")->capture_default_str();
  tune_cmd->add_option("--steps", tu.steps, "Gradient steps")->capture_default_str();
  tune_cmd->add_option("--batch", tu.batch, "Points per mini-batch")->capture_default_str();
  tune_cmd->add_option("--seed", tu.seed, "Seed")->capture_default_str();
  tune_cmd->add_option("--out", tu.out, "Report JSON")->required();
  tune_cmd->add_option("--out-model", tu.out_model, "Tuned model JSON (default: <out>.model.json)");
  tune_cmd->add_option("--step-size", tu.step_size, "Initial step size")->capture_default_str();
  tune_cmd->add_option("--budget", tu.budget, "Signature size per component")->capture_default_str();
  tune_cmd->add_option("--M", tu.M, "Compression size")->capture_default_str();
  tune_cmd->add_option("--eval-samples", tu.eval_samples, "Samples for the empirical estimates (0: skip)")
      ->capture_default_str();
  tune_cmd->add_option("--table", tu.table, "Quantizer table JSON");

  ReportArgs rp;
  auto* rep = app.add_subcommand("report", "Markdown table of ledgers");
  rep->add_option("--ledgers", rp.ledgers, "Ledger JSON files");
  rep->add_option("--format", rp.format, "Output format")->capture_default_str();

  std::vector<char*> argv;
  std::vector<std::string> storage = args.empty() ? std::vector<std::string>{"wassnet"} : args;
  for (std::string& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  if (build->parsed()) return guarded([&] { return cmd_quantizer_build(qb, out); }, err);
  if (approx->parsed()) return guarded([&] { return cmd_approximate(ap, out); }, err);
  if (emp->parsed()) return guarded([&] { return cmd_empirical(em, out); }, err);
  if (mwc->parsed()) return guarded([&] { return cmd_mw2(mw, out); }, err);
  if (tune_cmd->parsed()) return guarded([&] { return cmd_tune_prior(tu, out); }, err);
  return guarded([&] { return cmd_report(rp, out); }, err);
}

}  // namespace wassnet::cli
