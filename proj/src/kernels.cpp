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

#include "sprune/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sprune/errors.hpp"

namespace sprune::kernels {
namespace {

constexpr std::size_t kRowBlock = 16;
constexpr std::size_t kDepthBlock = 128;
constexpr std::size_t kColBlock = 512;
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

void check_sizes(std::size_t need_a, std::size_t need_b, std::size_t need_c, std::span<const double> a,
                 std::span<const double> b, std::span<double> c) {
  if (a.size() < need_a || b.size() < need_b || c.size() < need_c) {
    throw ShapeError("gemm: operand buffer smaller than its declared shape");
  }
}

std::vector<double> transposed(std::size_t rows, std::size_t cols, std::span<const double> x) {
  std::vector<double> t(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = x[i * cols + j];
  return t;
}

void gemm_nn_blocked(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
                     double* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  if (k == 0) return;
  const std::ptrdiff_t row_blocks = static_cast<std::ptrdiff_t>((m + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelWork)
  for (std::ptrdiff_t rb = 0; rb < row_blocks; ++rb) {
    const std::size_t i0 = static_cast<std::size_t>(rb) * kRowBlock;
    const std::size_t i1 = std::min(m, i0 + kRowBlock);
    for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
      const std::size_t jn = std::min(n, j0 + kColBlock) - j0;
      for (std::size_t t0 = 0; t0 < k; t0 += kDepthBlock) {
        const std::size_t t1 = std::min(k, t0 + kDepthBlock);
        for (std::size_t i = i0; i < i1; ++i) {
          double* crow = c + i * n + j0;
          const double* arow = a + i * k;
          for (std::size_t t = t0; t < t1; ++t) {
            const double av = arow[t];
            const double* brow = b + t * n + j0;
            for (std::size_t j = 0; j < jn; ++j) crow[j] += av * brow[j];
          }
        }
      }
    }
  }
}

void gelu_range(const double* x, double* out, std::size_t n) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * 0.5 * (1.0 + std::erf(x[i] * kInvSqrt2));
}

void softmax_row(const double* x, const std::uint8_t* keep, double* out, std::size_t cols) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cols; ++j) {
    if (keep && !keep[j]) continue;
    mx = std::max(mx, x[j]);
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    if (keep && !keep[j]) {
      out[j] = 0.0;
      continue;
    }
    out[j] = std::exp(x[j] - mx);
    sum += out[j];
  }
  const double inv = 1.0 / sum;
  for (std::size_t j = 0; j < cols; ++j) out[j] *= inv;
}

void layer_norm_row(const double* x, const double* gain, const double* bias, double eps, double* normalized,
                    double* rstd, double* out, std::size_t cols) {
  double mean = 0.0;
  for (std::size_t j = 0; j < cols; ++j) mean += x[j];
  mean /= static_cast<double>(cols);
  double var = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    const double dx = x[j] - mean;
    var += dx * dx;
  }
  var /= static_cast<double>(cols);
  const double r = 1.0 / std::sqrt(var + eps);
  *rstd = r;
  for (std::size_t j = 0; j < cols; ++j) {
    normalized[j] = (x[j] - mean) * r;
    out[j] = normalized[j] * gain[j] + bias[j];
  }
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  check_sizes(m * k, k * n, m * n, a, b, c);
  gemm_nn_blocked(m, k, n, a.data(), b.data(), c.data(), accumulate);
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  check_sizes(m * k, n * k, m * n, a, b, c);
  const auto bt = transposed(n, k, b);
  gemm_nn_blocked(m, k, n, a.data(), bt.data(), c.data(), accumulate);
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  check_sizes(k * m, k * n, m * n, a, b, c);
  const auto at = transposed(k, m, a);
  gemm_nn_blocked(m, k, n, at.data(), b.data(), c.data(), accumulate);
}

void gelu(std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  constexpr std::size_t kChunk = 4096;
  const std::ptrdiff_t chunks = static_cast<std::ptrdiff_t>((n + kChunk - 1) / kChunk);
#pragma omp parallel for schedule(static) if (chunks > 1)
  for (std::ptrdiff_t ch = 0; ch < chunks; ++ch) {
    const std::size_t lo = static_cast<std::size_t>(ch) * kChunk;
    gelu_range(x.data() + lo, out.data() + lo, std::min(n, lo + kChunk) - lo);
  }
}

void softmax_rows(std::size_t rows, std::size_t cols, std::span<const double> x,
                  std::span<const std::uint8_t> key_keep, std::span<double> out) {
  const std::uint8_t* keep = key_keep.empty() ? nullptr : key_keep.data();
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
    softmax_row(x.data() + i * cols, keep, out.data() + i * cols, cols);
  }
}

void layer_norm_rows(std::size_t rows, std::size_t cols, std::span<const double> x, std::span<const double> gain,
                     std::span<const double> bias, double eps, std::span<double> normalized,
                     std::span<double> rstd, std::span<double> out) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
    layer_norm_row(x.data() + i * cols, gain.data(), bias.data(), eps, normalized.data() + i * cols,
                   rstd.data() + i, out.data() + i * cols, cols);
  }
}

int max_threads() { return omp_get_max_threads(); }

void set_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

namespace reference {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  check_sizes(m * k, k * n, m * n, a, b, c);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = accumulate ? c[i * n + j] : 0.0;
      for (std::size_t t = 0; t < k; ++t) s += a[i * k + t] * b[t * n + j];
      c[i * n + j] = s;
    }
  }
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  check_sizes(m * k, n * k, m * n, a, b, c);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = accumulate ? c[i * n + j] : 0.0;
      for (std::size_t t = 0; t < k; ++t) s += a[i * k + t] * b[j * k + t];
      c[i * n + j] = s;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  check_sizes(k * m, k * n, m * n, a, b, c);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = accumulate ? c[i * n + j] : 0.0;
      for (std::size_t t = 0; t < k; ++t) s += a[t * m + i] * b[t * n + j];
      c[i * n + j] = s;
    }
  }
}

void gelu(std::span<const double> x, std::span<double> out) { gelu_range(x.data(), out.data(), x.size()); }

void softmax_rows(std::size_t rows, std::size_t cols, std::span<const double> x,
                  std::span<const std::uint8_t> key_keep, std::span<double> out) {
  const std::uint8_t* keep = key_keep.empty() ? nullptr : key_keep.data();
  for (std::size_t i = 0; i < rows; ++i) softmax_row(x.data() + i * cols, keep, out.data() + i * cols, cols);
}

void layer_norm_rows(std::size_t rows, std::size_t cols, std::span<const double> x, std::span<const double> gain,
                     std::span<const double> bias, double eps, std::span<double> normalized,
                     std::span<double> rstd, std::span<double> out) {
  for (std::size_t i = 0; i < rows; ++i) {
    layer_norm_row(x.data() + i * cols, gain.data(), bias.data(), eps, normalized.data() + i * cols, rstd.data() + i,
                   out.data() + i * cols, cols);
  }
}

}  // namespace reference

}  // namespace sprune::kernels
