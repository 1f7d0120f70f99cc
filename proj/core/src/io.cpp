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


#include "wassnet/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wassnet/error.hpp"

namespace wassnet::io {

namespace {

using json = nlohmann::ordered_json;

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what, std::string("invalid JSON: ") + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

const json& req(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string item(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path, "expected a number");
  return j.get<double>();
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path, "expected an integer");
  return j.get<long long>();
}

Vector vector_of(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], item(path, i));
  return v;
}

std::vector<double> std_vector_of(const json& j, const std::string& path) {
  const Vector v = vector_of(j, path);
  return {v.data(), v.data() + v.size()};
}

Matrix matrix_of(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ParseError(path, "expected a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = vector_of(j[r], item(path, r));
    if (static_cast<std::size_t>(row.size()) != cols) throw ParseError(item(path, r), "ragged rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(Vector(m.row(r).transpose())));
  return rows;
}

// Rethrows library validation failures as parse errors at `path`.
template <class F>
auto checked(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ParseError(path, e.what());
  }
}

json gaussian_to_json(const Gaussian& g) {
  json j;
  j["mean"] = to_json(g.mean());
  json cov;
  if (g.is_diagonal()) {
    cov["diag"] = to_json(g.variances());
  } else {
    cov["full"] = to_json(g.covariance());
  }
  j["cov"] = cov;
  return j;
}

Gaussian gaussian_from_json(const json& j, const std::string& path) {
  Vector mean = vector_of(req(j, "mean", path), child(path, "mean"));
  const json& cov = req(j, "cov", path);
  const std::string cpath = child(path, "cov");
  return checked(cpath, [&] {
    if (cov.contains("diag")) {
      Vector d = vector_of(cov["diag"], child(cpath, "diag"));
      if (d.size() != mean.size()) throw ParseError(child(cpath, "diag"), "length differs from mean");
      return Gaussian::diagonal(std::move(mean), std::move(d));
    }
    if (cov.contains("full")) {
      Matrix f = matrix_of(cov["full"], child(cpath, "full"));
      if (f.rows() != mean.size() || f.cols() != mean.size()) {
        throw ParseError(child(cpath, "full"), "shape differs from the mean dimension");
      }
      return Gaussian::full(std::move(mean), std::move(f));
    }
    throw ParseError(cpath, "expected a \"diag\" or \"full\" entry");
  });
}

json record_to_json(const LayerRecord& r) {
  json j;
  j["k"] = r.k;
  j["spectral_term"] = r.spectral_term;
  j["signature_term"] = r.signature_term;
  j["compression_term"] = r.compression_term;
  j["lipschitz"] = r.lipschitz;
  j["accumulated"] = r.accumulated;
  return j;
}

}  // namespace

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
  out.close();
  if (!out) throw Error("failed writing " + path);
}

std::string dump_gmm(const GaussianMixture& g) {
  json j;
  j["weights"] = g.weights();
  json comps = json::array();
  for (const Gaussian& c : g.components()) comps.push_back(gaussian_to_json(c));
  j["components"] = comps;
  return dump(j);
}

GaussianMixture parse_gmm(const std::string& text) {
  const json j = parse_json(text, "gmm");
  std::vector<double> w = std_vector_of(req(j, "weights", ""), "weights");
  const json& comps = req(j, "components", "");
  if (!comps.is_array() || comps.size() != w.size()) {
    throw ParseError("components", "expected one component per weight");
  }
  std::vector<Gaussian> gs;
  for (std::size_t i = 0; i < comps.size(); ++i) gs.push_back(gaussian_from_json(comps[i], item("components", i)));
  return checked("", [&] { return GaussianMixture(std::move(w), std::move(gs)); });
}

std::string dump_discrete(const DiscreteDistribution& d) {
  json j;
  j["locations"] = to_json(Matrix(d.locations.transpose()));
  j["weights"] = d.weights;
  return dump(j);
}

DiscreteDistribution parse_discrete(const std::string& text) {
  const json j = parse_json(text, "discrete");
  Matrix locs = matrix_of(req(j, "locations", ""), "locations");
  std::vector<double> w = std_vector_of(req(j, "weights", ""), "weights");
  return checked("", [&] { return DiscreteDistribution(Matrix(locs.transpose()), std::move(w)); });
}

std::string dump_table(const QuantizerTable& t) {
  json j;
  j["version"] = QuantizerTable::kVersion;
  j["tol"] = t.tol();
  j["max_iters"] = t.max_iters();
  json entries;
  for (const Quantizer1D& q : t.entries()) {
    json e;
    e["locations"] = q.locations;
    e["w2sq"] = q.w2sq;
    e["iterations"] = q.iterations;
    entries[std::to_string(q.size)] = e;
  }
  j["entries"] = entries;
  return dump(j);
}

QuantizerTable parse_table(const std::string& text) {
  const json j = parse_json(text, "table");
  const long long version = integer(req(j, "version", ""), "version");
  if (version != QuantizerTable::kVersion) {
    throw ParseError("version", "unsupported table version " + std::to_string(version));
  }
  const double tol = number(req(j, "tol", ""), "tol");
  const int max_iters = j.contains("max_iters") ? static_cast<int>(integer(j["max_iters"], "max_iters"))
                                                : kTolerances.quantizer_max_iters;
  const json& entries = req(j, "entries", "");
  if (!entries.is_object() || entries.empty()) throw ParseError("entries", "expected a nonempty object");
  std::vector<Quantizer1D> qs(entries.size());
  for (auto it = entries.begin(); it != entries.end(); ++it) {
    const std::string path = "entries." + it.key();
    int n = 0;
    const auto [ptr, ec] = std::from_chars(it.key().data(), it.key().data() + it.key().size(), n);
    if (ec != std::errc() || ptr != it.key().data() + it.key().size() || n < 1 ||
        n > static_cast<int>(qs.size())) {
      throw ParseError(path, "sizes must be the contiguous integers 1..n");
    }
    Quantizer1D& q = qs[n - 1];
    q.size = n;
    q.locations = std_vector_of(req(it.value(), "locations", path), path + ".locations");
    q.w2sq = number(req(it.value(), "w2sq", path), path + ".w2sq");
    if (it.value().contains("iterations")) q.iterations = static_cast<int>(integer(it.value()["iterations"], path + ".iterations"));
    if (static_cast<int>(q.locations.size()) != n) throw ParseError(path + ".locations", "expected " + std::to_string(n) + " locations");
    for (int i = 0; i + 1 < n; ++i) q.boundaries.push_back(0.5 * (q.locations[i] + q.locations[i + 1]));
  }
  return checked("entries", [&] { return QuantizerTable(std::move(qs), tol, max_iters); });
}

std::string dump_model(const SnnModel& m) {
  json j;
  j["input_dim"] = m.input_dim();
  json layers = json::array();
  for (const Layer& layer : m.layers()) {
    json l;
    if (const auto* s = std::get_if<StochasticLinear>(&layer)) {
      l["type"] = "stochastic_linear";
      l["weight_mean"] = to_json(s->weight_mean);
      l["weight_var"] = to_json(s->weight_var);
      l["bias_mean"] = to_json(s->bias_mean);
      l["bias_var"] = to_json(s->bias_var);
      l["ntk"] = s->ntk;
    } else if (const auto* d = std::get_if<DeterministicLinear>(&layer)) {
      l["type"] = "linear";
      l["weight"] = to_json(d->weight);
      l["bias"] = to_json(d->bias);
    } else if (const auto* p = std::get_if<Dropout>(&layer)) {
      l["type"] = "dropout";
      l["keep_prob"] = p->keep_prob;
    } else {
      l["type"] = "activation";
      l["kind"] = activation_name(std::get<ActivationLayer>(layer).kind);
    }
    layers.push_back(l);
  }
  j["layers"] = layers;
  return dump(j);
}

SnnModel parse_model(const std::string& text) {
  const json j = parse_json(text, "model");
  const long long input_dim = integer(req(j, "input_dim", ""), "input_dim");
  if (j.contains("inputs")) {
    const json& kind = j["inputs"];
    if (!kind.is_string() || (kind != "points" && kind != "features")) {
      throw ParseError("inputs", "expected \"points\" or \"features\"");
    }
  }
  const json& layers = req(j, "layers", "");
  if (!layers.is_array()) throw ParseError("layers", "expected an array");
  std::vector<Layer> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string path = item("layers", i);
    const json& l = layers[i];
    const json& type = req(l, "type", path);
    if (!type.is_string()) throw ParseError(path + ".type", "expected a string");
    const std::string t = type.get<std::string>();
    if (t == "stochastic_linear") {
      StochasticLinear s;
      s.weight_mean = matrix_of(req(l, "weight_mean", path), path + ".weight_mean");
      s.weight_var = matrix_of(req(l, "weight_var", path), path + ".weight_var");
      s.bias_mean = vector_of(req(l, "bias_mean", path), path + ".bias_mean");
      s.bias_var = vector_of(req(l, "bias_var", path), path + ".bias_var");
      if (l.contains("ntk")) {
        if (!l["ntk"].is_boolean()) throw ParseError(path + ".ntk", "expected a boolean");
        s.ntk = l["ntk"].get<bool>();
      }
      out.emplace_back(std::move(s));
    } else if (t == "linear") {
      DeterministicLinear d;
      d.weight = matrix_of(req(l, "weight", path), path + ".weight");
      d.bias = vector_of(req(l, "bias", path), path + ".bias");
      out.emplace_back(std::move(d));
    } else if (t == "dropout") {
      out.emplace_back(Dropout{number(req(l, "keep_prob", path), path + ".keep_prob")});
    } else if (t == "activation") {
      const json& kind = req(l, "kind", path);
      if (!kind.is_string()) throw ParseError(path + ".kind", "expected a string");
      out.emplace_back(ActivationLayer{checked(path + ".kind", [&] { return parse_activation(kind.get<std::string>()); })});
    } else {
      throw ParseError(path + ".type", "unknown layer type '" + t + "'");
    }
  }
  return checked("layers", [&] { return SnnModel(static_cast<int>(input_dim), std::move(out)); });
}

Matrix parse_points(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw ParseError("points", "no points");
  if (text[first] == '[') return matrix_of(parse_json(text, "points"), "points");

  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      const std::string trimmed = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), v);
      if (trimmed.empty() || ec != std::errc() || ptr != trimmed.data() + trimmed.size()) {
        throw ParseError("points line " + std::to_string(lineno), "'" + trimmed + "' is not a number");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("points line " + std::to_string(lineno), "ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("points", "no points");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

std::string dump_ledger(const LedgerDocument& doc) {
  json j;
  j["model"] = doc.model;
  j["input_count"] = doc.ledger.input_count;
  j["budget"] = doc.budget;
  j["M"] = doc.M;
  json records = json::array();
  for (const LayerRecord& r : doc.ledger.records) records.push_back(record_to_json(r));
  j["records"] = records;
  j["bound"] = doc.ledger.bound;
  j["relative_bound"] = doc.relative_bound;
  if (doc.empirical_relative) j["empirical_relative"] = *doc.empirical_relative;
  return dump(j);
}

LedgerDocument parse_ledger(const std::string& text) {
  const json j = parse_json(text, "ledger");
  LedgerDocument doc;
  if (j.contains("model")) {
    if (!j["model"].is_string()) throw ParseError("model", "expected a string");
    doc.model = j["model"].get<std::string>();
  }
  doc.ledger.input_count = static_cast<int>(integer(req(j, "input_count", ""), "input_count"));
  doc.budget = integer(req(j, "budget", ""), "budget");
  doc.M = static_cast<int>(integer(req(j, "M", ""), "M"));
  const json& records = req(j, "records", "");
  if (!records.is_array()) throw ParseError("records", "expected an array");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string path = item("records", i);
    LayerRecord r;
    r.k = static_cast<int>(integer(req(records[i], "k", path), path + ".k"));
    r.spectral_term = number(req(records[i], "spectral_term", path), path + ".spectral_term");
    r.signature_term = number(req(records[i], "signature_term", path), path + ".signature_term");
    r.compression_term = number(req(records[i], "compression_term", path), path + ".compression_term");
    r.lipschitz = number(req(records[i], "lipschitz", path), path + ".lipschitz");
    r.accumulated = number(req(records[i], "accumulated", path), path + ".accumulated");
    doc.ledger.records.push_back(r);
  }
  doc.ledger.bound = number(req(j, "bound", ""), "bound");
  doc.relative_bound = number(req(j, "relative_bound", ""), "relative_bound");
  if (j.contains("empirical_relative")) doc.empirical_relative = number(j["empirical_relative"], "empirical_relative");
  return doc;
}

std::string dump_plan(const TransportPlan& plan) {
  json j;
  j["cost"] = plan.cost;
  j["plan"] = to_json(plan.plan);
  return dump(j);
}

std::string dump_tune_report(const TuneReport& report, const SnnModel& tmpl, const RbfKernel& kernel) {
  auto loss_json = [](const LossComponents& c) {
    json j;
    j["loss"] = c.loss;
    j["mw2_term"] = c.mw2_term;
    j["bound_term"] = c.bound_term;
    return j;
  };
  auto params_json = [&](const PriorParams& p) {
    json arr = json::array();
    for (std::size_t i = 0; i < p.log_variances.size(); ++i) {
      json e;
      e["name"] = param_name(tmpl, p, i);
      e["log_variance"] = p.log_variances[i];
      arr.push_back(e);
    }
    return arr;
  };
  json j;
  j["gp"] = format_gp_spec(kernel);
  json opts;
  opts["beta"] = report.options.beta;
  opts["steps"] = report.options.steps;
  opts["step_size"] = report.options.step_size;
  opts["decay"] = report.options.decay;
  opts["batch"] = report.options.batch;
  opts["seed"] = report.options.seed;
  opts["fd_step"] = report.options.fd_step;
  opts["max_update"] = report.options.max_update;
  opts["eval_samples"] = report.options.eval_samples;
  j["options"] = opts;
  json history = json::array();
  for (const TuneStep& s : report.history) {
    json h;
    h["loss"] = s.loss;
    h["mw2_term"] = s.mw2_term;
    h["bound_term"] = s.bound_term;
    history.push_back(h);
  }
  j["history"] = history;
  j["initial_params"] = params_json(report.initial);
  j["final_params"] = params_json(report.final_params);
  j["initial_full"] = loss_json(report.initial_full);
  j["final_full"] = loss_json(report.final_full);
  j["reverted"] = report.reverted;
  if (report.reverted) {
    // Non-finite losses are written as null.
    j["descended_params"] = params_json(report.descended);
    j["descended_full"] = loss_json(report.descended_full);
  }
  j["final_relative_formal"] = report.final_relative_formal;
  if (report.final_relative_empirical >= 0.0) {
    j["initial_relative_empirical"] = report.initial_relative_empirical;
    j["final_relative_empirical"] = report.final_relative_empirical;
  }
  return dump(j);
}

}  // namespace wassnet::io
