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


#include <benchmark/benchmark.h>

#include "wassnet/quantizer.hpp"

namespace {

using namespace wassnet;

void BM_QuantizerTableBuild(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(QuantizerTable::build(static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_QuantizerTableBuild)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SignatureOfGaussian(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(1);
  std::normal_distribution<double> n;
  Matrix a(d, d);
  for (int k = 0; k < a.size(); ++k) a.data()[k] = n(rng);
  const Gaussian g = Gaussian::full(Vector::Zero(d), a * a.transpose() + Matrix::Identity(d, d));
  const QuantizerTable& table = default_quantizer_table();
  for (auto _ : state) {
    benchmark::DoNotOptimize(signature_of_gaussian(g, state.range(1), table));
  }
}
BENCHMARK(BM_SignatureOfGaussian)->Args({2, 64})->Args({8, 256})->Args({32, 1024});

}  // namespace
