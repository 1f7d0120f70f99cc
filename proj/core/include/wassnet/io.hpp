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


#ifndef WASSNET_IO_HPP_
#define WASSNET_IO_HPP_

#include <optional>
#include <string>

#include "wassnet/discrete.hpp"
#include "wassnet/gaussian.hpp"
#include "wassnet/prior_tune.hpp"
#include "wassnet/quantizer.hpp"
#include "wassnet/snn.hpp"
#include "wassnet/transport.hpp"

// JSON serialization. Parsers throw ParseError naming the offending field path.
namespace wassnet::io {

std::string read_text(const std::string& path);
/// Throws Error when the file cannot be written.
void write_text(const std::string& path, const std::string& text);

std::string dump_gmm(const GaussianMixture& g);
GaussianMixture parse_gmm(const std::string& text);

std::string dump_discrete(const DiscreteDistribution& d);
DiscreteDistribution parse_discrete(const std::string& text);

std::string dump_table(const QuantizerTable& t);
QuantizerTable parse_table(const std::string& text);

std::string dump_model(const SnnModel& m);
SnnModel parse_model(const std::string& text);

/// Rows are points. JSON list-of-lists when the text starts with '[', CSV otherwise.
Matrix parse_points(const std::string& text);

struct LedgerDocument {
  BoundLedger ledger;
  std::string model;
  long long budget = 0;
  int M = 0;
  double relative_bound = 0.0;
  std::optional<double> empirical_relative;
};

std::string dump_ledger(const LedgerDocument& doc);
LedgerDocument parse_ledger(const std::string& text);

std::string dump_plan(const TransportPlan& plan);

std::string dump_tune_report(const TuneReport& report, const SnnModel& tmpl, const RbfKernel& kernel);

}  // namespace wassnet::io

#endif  // WASSNET_IO_HPP_
