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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Dense float64 compute kernels.
//
// Every kernel has an OpenMP-parallel implementation (sprune::kernels) and a
// plain serial implementation (sprune::kernels::reference) kept as the test
// oracle and benchmark baseline. Both accumulate each output element in the
// same order, so results agree bit for bit.
//
// Matrix arguments are row-major. `accumulate` adds into `c` instead of
// overwriting it.
namespace sprune::kernels {

// c[m×n] = a[m×k] · b[k×n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate = false);
// c[m×n] = a[m×k] · b[n×k]ᵀ
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate = false);
// c[m×n] = a[k×m]ᵀ · b[k×n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate = false);

// Exact GeLU: x·Φ(x) with Φ(x) = (1 + erf(x/√2)) / 2.
void gelu(std::span<const double> x, std::span<double> out);

// Row softmax with max subtraction. When key_keep is non-empty, columns with
// key_keep[j] == 0 get probability 0.
void softmax_rows(std::size_t rows, std::size_t cols, std::span<const double> x,
                  std::span<const std::uint8_t> key_keep, std::span<double> out);

// Per-row normalization: normalized = (x - mean) * rstd, out = normalized·gain + bias.
void layer_norm_rows(std::size_t rows, std::size_t cols, std::span<const double> x,
                     std::span<const double> gain, std::span<const double> bias, double eps,
                     std::span<double> normalized, std::span<double> rstd, std::span<double> out);

// Number of threads OpenMP regions will use.
int max_threads();
void set_threads(int threads);

namespace reference {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate = false);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate = false);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate = false);
void gelu(std::span<const double> x, std::span<double> out);
void softmax_rows(std::size_t rows, std::size_t cols, std::span<const double> x,
                  std::span<const std::uint8_t> key_keep, std::span<double> out);
void layer_norm_rows(std::size_t rows, std::size_t cols, std::span<const double> x,
                     std::span<const double> gain, std::span<const double> bias, double eps,
                     std::span<double> normalized, std::span<double> rstd, std::span<double> out);

}  // namespace reference

}  // namespace sprune::kernels
