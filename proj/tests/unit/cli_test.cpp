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


#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "commands.hpp"
#include "wassnet/gaussian.hpp"
#include "wassnet/io.hpp"
#include "wassnet/transport.hpp"

namespace wassnet {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "wassnet");
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string data(const std::string& name) { return std::string(WASSNET_DATA_DIR) + "/" + name; }

double value_after(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string k;
  double v = 0.0;
  while (in >> k) {
    if (k == key && in >> v) return v;
  }
  ADD_FAILURE() << "missing " << key << " in: " << text;
  return 0.0;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("wassnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, QuantizerBuildSingleEntry) {
  const Result r = run({"quantizer-build", "--max-n", "1", "--out", path("t1.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const QuantizerTable t = io::parse_table(io::read_text(path("t1.json")));
  ASSERT_EQ(t.max_size(), 1);
  EXPECT_EQ(t.at(1).locations, std::vector<double>{0.0});
  EXPECT_NEAR(t.w2sq(1), 1.0, 1e-15);
}

TEST_F(CliTest, QuantizerBuildDecreasingAndIdempotent) {
  ASSERT_EQ(run({"quantizer-build", "--max-n", "8", "--tol", "1e-12", "--out", path("t.json")}).code, 0);
  const std::string first = io::read_text(path("t.json"));
  ASSERT_EQ(run({"quantizer-build", "--max-n", "8", "--tol", "1e-12", "--out", path("t.json")}).code, 0);
  EXPECT_EQ(io::read_text(path("t.json")), first);
  const QuantizerTable t = io::parse_table(first);
  for (int n = 2; n <= 8; ++n) EXPECT_LT(t.w2sq(n), t.w2sq(n - 1));
}

TEST_F(CliTest, QuantizerBuildUnwritablePath) {
  const Result r = run({"quantizer-build", "--max-n", "2", "--out", "/nonexistent/dir/t.json"});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(run({"quantizer-build", "--max-n", "0", "--out", path("t.json")}).code, 2);
}

TEST_F(CliTest, ApproximateDeterministicModel) {
  const Result r = run({"approximate", "--model", data("deterministic_relu.json"), "--points", data("points_2d.csv"),
                        "--out-gmm", path("g.json"), "--out-ledger", path("l.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(value_after(r.out, "bound"), 0.0);
  const GaussianMixture g = io::parse_gmm(io::read_text(path("g.json")));
  ASSERT_EQ(g.size(), 1);
  EXPECT_TRUE(g.component(0).is_dirac());

  const Result e = run({"empirical", "--model", data("deterministic_relu.json"), "--points", data("points_2d.csv"),
                        "--gmm", path("g.json"), "--samples", "50"});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NEAR(value_after(e.out, "empirical_w2"), 0.0, 1e-12);
}

TEST_F(CliTest, ApproximateReferenceModelAuditsAndIsSound) {
  const Result r = run({"approximate", "--model", data("mlp_1_16_1_tanh.json"), "--points", data("points_1d.csv"),
                        "--budget", "10", "--M", "5", "--out-gmm", path("g.json"), "--out-ledger", path("l.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const io::LedgerDocument doc = io::parse_ledger(io::read_text(path("l.json")));
  EXPECT_LE(doc.ledger.audit(), 1e-12);
  EXPECT_EQ(doc.model, "mlp_1_16_1_tanh");

  const Result e = run({"empirical", "--model", data("mlp_1_16_1_tanh.json"), "--points", data("points_1d.csv"),
                        "--gmm", path("g.json"), "--samples", "2000", "--seed", "1", "--ledger", path("l.json")});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_LE(value_after(e.out, "empirical_w2"), doc.ledger.bound);
  EXPECT_TRUE(io::parse_ledger(io::read_text(path("l.json"))).empirical_relative.has_value());
}

TEST_F(CliTest, ApproximateDuplicatePoints) {
  const Result r = run({"approximate", "--model", data("mlp_1_16_1_tanh.json"), "--points", data("points_dup.csv"),
                        "--out-gmm", path("g.json"), "--out-ledger", path("l.json")});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, ApproximateErrorsNameTheField) {
  io::write_text(path("bad.json"), "{\"input_dim\":1,\"layers\":[{\"type\":\"linear\",\"weight\":[[1]],\"bias\":[\"a\"]}]}");
  const Result r = run({"approximate", "--model", path("bad.json"), "--points", data("points_1d.csv"),
                        "--out-gmm", path("g.json"), "--out-ledger", path("l.json")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("layers[0].bias"), std::string::npos) << r.err;
  const Result d = run({"approximate", "--model", data("mlp_1_16_1_tanh.json"), "--points", data("points_2d.csv"),
                        "--out-gmm", path("g.json"), "--out-ledger", path("l.json")});
  EXPECT_NE(d.code, 0);
}

TEST_F(CliTest, ByteIdenticalOutputs) {
  for (const char* tag : {"a", "b"}) {
    ASSERT_EQ(run({"approximate", "--model", data("mlp_1_16_1_tanh.json"), "--points", data("points_3.csv"),
                   "--seed", "4", "--out-gmm", path(std::string("g") + tag), "--out-ledger",
                   path(std::string("l") + tag)})
                  .code,
              0);
  }
  EXPECT_EQ(io::read_text(path("ga")), io::read_text(path("gb")));
  EXPECT_EQ(io::read_text(path("la")), io::read_text(path("lb")));
}

TEST_F(CliTest, EmpiricalSmokeAndCap) {
  ASSERT_EQ(run({"approximate", "--model", data("mlp_1_16_1_tanh.json"), "--points", data("points_1d.csv"),
                 "--out-gmm", path("g.json"), "--out-ledger", path("l.json")})
                .code,
            0);
  const Result e = run({"empirical", "--model", data("mlp_1_16_1_tanh.json"), "--points", data("points_1d.csv"),
                        "--gmm", path("g.json"), "--samples", "10"});
  ASSERT_EQ(e.code, 0) << e.err;
  const double v = value_after(e.out, "empirical_w2");
  EXPECT_TRUE(std::isfinite(v) && v >= 0.0);
  const Result c = run({"empirical", "--model", data("mlp_1_16_1_tanh.json"), "--points", data("points_1d.csv"),
                        "--gmm", path("g.json"), "--samples", "100000"});
  EXPECT_NE(c.code, 0);
  EXPECT_NE(c.err.find("--samples"), std::string::npos) << c.err;
}

TEST_F(CliTest, Mw2Examples) {
  const Result self = run({"mw2", "--gmm-a", data("gmm_pair_a.json"), "--gmm-b", data("gmm_pair_a.json")});
  ASSERT_EQ(self.code, 0) << self.err;
  EXPECT_EQ(value_after(self.out, "mw2"), 0.0);

  const Result pair = run({"mw2", "--gmm-a", data("gmm_pair_a.json"), "--gmm-b", data("gmm_pair_b.json"), "--plan",
                           path("plan.json")});
  ASSERT_EQ(pair.code, 0) << pair.err;
  const std::string expected = io::read_text(data("gmm_pair_expected.json"));
  const double oracle = std::stod(expected.substr(expected.find(':', expected.find("\"mw2\"")) + 1));
  EXPECT_NEAR(value_after(pair.out, "mw2"), oracle, 1e-12);
  EXPECT_TRUE(fs::exists(path("plan.json")));

  const Gaussian a = Gaussian::full((Vector(2) << 1, 0).finished(), (Matrix(2, 2) << 2, 0.5, 0.5, 1).finished());
  const Gaussian b = Gaussian::diagonal(Vector::Zero(2), (Vector(2) << 0.5, 3).finished());
  io::write_text(path("a.json"), io::dump_gmm(GaussianMixture(a)));
  io::write_text(path("b.json"), io::dump_gmm(GaussianMixture(b)));
  const Result single = run({"mw2", "--gmm-a", path("a.json"), "--gmm-b", path("b.json")});
  ASSERT_EQ(single.code, 0);
  EXPECT_NEAR(value_after(single.out, "mw2"), gaussian_w2(a, b), 1e-14);

  io::write_text(path("c.json"), io::dump_gmm(GaussianMixture(Gaussian::dirac(Vector::Zero(3)))));
  EXPECT_NE(run({"mw2", "--gmm-a", path("a.json"), "--gmm-b", path("c.json")}).code, 0);
}

TEST_F(CliTest, TunePriorSmoke) {
  const Result r = run({"tune-prior", "--arch", data("prior_tiny.json"), "--gp", "rbf:ls=0.5,var=1", "--points",
                        data("points_3.csv"), "--steps", "1", "--batch", "2", "--eval-samples", "50", "--out",
                        path("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string report = io::read_text(path("r.json"));
  EXPECT_TRUE(fs::exists(path("r.model.json")));
  EXPECT_NO_THROW(io::parse_model(io::read_text(path("r.model.json"))));
  const auto h = report.find("\"history\"");
  ASSERT_NE(h, std::string::npos);
  const std::string hist = report.substr(h, report.find(']', h) - h);
  std::size_t n = 0;
  for (std::size_t at = hist.find("\"loss\""); at != std::string::npos; at = hist.find("\"loss\"", at + 1)) ++n;
  EXPECT_EQ(n, 1u);
}

TEST_F(CliTest, TunePriorBundledDescends) {
  const Result r = run({"tune-prior", "--arch", data("prior_2x32_tanh.json"), "--gp", "rbf:ls=0.5,var=1",
                        "--points", data("grid20.csv"), "--steps", "2", "--batch", "5", "--eval-samples", "0",
                        "--out", path("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LE(value_after(r.out, "final_loss"), value_after(r.out, "initial_loss"));
}

TEST_F(CliTest, TunePriorBadGpSpec) {
  const Result r = run({"tune-prior", "--arch", data("prior_tiny.json"), "--gp", "rbf:ls=oops", "--points",
                        data("points_3.csv"), "--out", path("r.json")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("rbf:ls=<float>,var=<float>"), std::string::npos) << r.err;
}

TEST_F(CliTest, ReportTables) {
  const Result empty = run({"report", "--format", "md"});
  ASSERT_EQ(empty.code, 0) << empty.err;
  EXPECT_EQ(empty.out, "| model | D | budget | M | empirical | formal |\n|---|---|---|---|---|---|\n");

  std::vector<std::string> args = {"report", "--format", "md", "--ledgers"};
  for (const char* b : {"2", "8", "32"}) {
    ASSERT_EQ(run({"approximate", "--model", data("mlp_1_16_1_tanh.json"), "--points", data("points_1d.csv"),
                   "--budget", b, "--out-gmm", path(std::string("g") + b), "--out-ledger",
                   path(std::string("l") + b)})
                  .code,
              0);
    args.push_back(path(std::string("l") + b));
  }
  const Result r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::vector<double> formal;
  int row = 0;
  while (std::getline(in, line)) {
    if (++row <= 2) continue;
    EXPECT_NE(line.find("| - |"), std::string::npos) << line;
    formal.push_back(std::stod(line.substr(line.rfind('|', line.size() - 2) + 1)));
  }
  ASSERT_EQ(formal.size(), 3u);
  EXPECT_LE(formal[1], formal[0]);
  EXPECT_LE(formal[2], formal[1]);
}

TEST_F(CliTest, UsageAndParseExitCodes) {
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"approximate", "--model", data("mlp_1_16_1_tanh.json")}).code, 2);
  EXPECT_EQ(run({"mw2", "--gmm-a", path("missing.json"), "--gmm-b", path("missing.json")}).code, 3);
  io::write_text(path("bad.json"), "{not json");
  EXPECT_EQ(run({"mw2", "--gmm-a", path("bad.json"), "--gmm-b", data("gmm_pair_a.json")}).code, 3);
}

}  // namespace
}  // namespace wassnet
