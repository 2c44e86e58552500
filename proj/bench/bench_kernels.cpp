// Copyright (c) 2026 The sprune Authors. All Rights Reserved.
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

// Parallel kernels against their serial references, plus end-to-end forward
// latency of a small encoder.

#include <benchmark/benchmark.h>

#include <vector>

#include "sprune/kernels.hpp"
#include "sprune/model.hpp"
#include "sprune/random.hpp"

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  sprune::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <auto Gemm>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(n * n, 1), b = random_vector(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Gemm(n, n, n, a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

void gemm_nn_parallel(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
                      std::span<const double> b, std::span<double> c, bool acc) {
  sprune::kernels::gemm_nn(m, k, n, a, b, c, acc);
}
void gemm_nn_serial(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
                    std::span<const double> b, std::span<double> c, bool acc) {
  sprune::kernels::reference::gemm_nn(m, k, n, a, b, c, acc);
}
void gemm_nt_parallel(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
                      std::span<const double> b, std::span<double> c, bool acc) {
  sprune::kernels::gemm_nt(m, k, n, a, b, c, acc);
}
void gemm_nt_serial(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
                    std::span<const double> b, std::span<double> c, bool acc) {
  sprune::kernels::reference::gemm_nt(m, k, n, a, b, c, acc);
}

BENCHMARK(BM_Gemm<gemm_nn_parallel>)->Name("gemm_nn/parallel")->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(BM_Gemm<gemm_nn_serial>)->Name("gemm_nn/serial")->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(BM_Gemm<gemm_nt_parallel>)->Name("gemm_nt/parallel")->Arg(128)->Arg(256);
BENCHMARK(BM_Gemm<gemm_nt_serial>)->Name("gemm_nt/serial")->Arg(128)->Arg(256);

void BM_Softmax(benchmark::State& state, bool parallel) {
  const std::size_t rows = 1024, cols = 128;
  const auto x = random_vector(rows * cols, 3);
  std::vector<double> out(rows * cols);
  for (auto _ : state) {
    if (parallel) {
      sprune::kernels::softmax_rows(rows, cols, x, {}, out);
    } else {
      sprune::kernels::reference::softmax_rows(rows, cols, x, {}, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK_CAPTURE(BM_Softmax, parallel, true);
BENCHMARK_CAPTURE(BM_Softmax, serial, false);

void BM_Gelu(benchmark::State& state, bool parallel) {
  const auto x = random_vector(1 << 18, 4);
  std::vector<double> out(x.size());
  for (auto _ : state) {
    if (parallel) {
      sprune::kernels::gelu(x, out);
    } else {
      sprune::kernels::reference::gelu(x, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK_CAPTURE(BM_Gelu, parallel, true);
BENCHMARK_CAPTURE(BM_Gelu, serial, false);

void BM_EncoderForward(benchmark::State& state) {
  const auto cfg = sprune::ModelConfig::uniform(4, 256, 8, 1024, 1000, 128, 2);
  const auto model = sprune::random_model(cfg, 7);
  sprune::Rng rng(5);
  sprune::TokenBatch tokens{8, 64, {}};
  for (std::size_t i = 0; i < 8 * 64; ++i) tokens.ids.push_back(static_cast<std::int32_t>(1 + rng.below(999)));
  for (auto _ : state) benchmark::DoNotOptimize(sprune::task_forward(model, tokens));
}
BENCHMARK(BM_EncoderForward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
