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

#include <gtest/gtest.h>

#include <cstring>
#include <vector>

#include "sprune/kernels.hpp"
#include "sprune/random.hpp"

namespace sprune {
namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-3.0, 3.0);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct GemmShape {
  std::size_t m, k, n;
};

void PrintTo(const GemmShape& s, std::ostream* os) { *os << s.m << "x" << s.k << "x" << s.n; }

class GemmAgreement : public ::testing::TestWithParam<GemmShape> {};

TEST_P(GemmAgreement, ParallelMatchesReferenceBitForBit) {
  const auto [m, k, n] = GetParam();
  const auto a = random_vector(m * k, 1), b_nn = random_vector(k * n, 2), b_nt = random_vector(n * k, 3);
  const auto a_t = random_vector(k * m, 4);
  const auto seed_c = random_vector(m * n, 5);
  const int before = kernels::max_threads();
  for (int threads : {1, 3, 4}) {
    kernels::set_threads(threads);
    for (bool acc : {false, true}) {
      std::vector<double> p = seed_c, r = seed_c;
      kernels::gemm_nn(m, k, n, a, b_nn, p, acc);
      kernels::reference::gemm_nn(m, k, n, a, b_nn, r, acc);
      EXPECT_TRUE(bit_equal(p, r)) << "nn acc=" << acc;
      p = seed_c, r = seed_c;
      kernels::gemm_nt(m, k, n, a, b_nt, p, acc);
      kernels::reference::gemm_nt(m, k, n, a, b_nt, r, acc);
      EXPECT_TRUE(bit_equal(p, r)) << "nt acc=" << acc;
      p = seed_c, r = seed_c;
      kernels::gemm_tn(m, k, n, a_t, b_nn, p, acc);
      kernels::reference::gemm_tn(m, k, n, a_t, b_nn, r, acc);
      EXPECT_TRUE(bit_equal(p, r)) << "tn acc=" << acc;
    }
  }
  kernels::set_threads(before);
}

INSTANTIATE_TEST_SUITE_P(Shapes, GemmAgreement,
                         ::testing::Values(GemmShape{1, 1, 1}, GemmShape{3, 5, 7}, GemmShape{17, 129, 33},
                                           GemmShape{64, 300, 520}, GemmShape{200, 64, 200}, GemmShape{0, 4, 3},
                                           GemmShape{4, 0, 3}),
                         [](const auto& info) {
                           const GemmShape& s = info.param;
                           return std::to_string(s.m) + "x" + std::to_string(s.k) + "x" + std::to_string(s.n);
                         });

TEST(Gemm, ReferenceIsTheTextbookProduct) {
  const std::vector<double> a = {1, 2, 3, 4, 5, 6};  // 2x3
  const std::vector<double> b = {7, 8, 9, 10, 11, 12};  // 3x2
  std::vector<double> c(4);
  kernels::reference::gemm_nn(2, 3, 2, a, b, c);
  EXPECT_EQ(c, (std::vector<double>{58, 64, 139, 154}));
}

TEST(Gemm, TransposedVariantsAgreeWithExplicitTranspose) {
  const std::size_t m = 5, k = 4, n = 3;
  const auto a = random_vector(m * k, 7), b = random_vector(n * k, 8);
  std::vector<double> bt(k * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < k; ++t) bt[t * n + i] = b[i * k + t];
  std::vector<double> c1(m * n), c2(m * n);
  kernels::gemm_nt(m, k, n, a, b, c1);
  kernels::gemm_nn(m, k, n, a, bt, c2);
  EXPECT_TRUE(bit_equal(c1, c2));
}

TEST(Elementwise, GeluSoftmaxLayerNormMatchReference) {
  const std::size_t rows = 300, cols = 130;
  const auto x = random_vector(rows * cols, 9);
  const int before = kernels::max_threads();
  kernels::set_threads(4);
  std::vector<double> p(x.size()), r(x.size());
  kernels::gelu(x, p);
  kernels::reference::gelu(x, r);
  EXPECT_TRUE(bit_equal(p, r));

  std::vector<std::uint8_t> keep(cols, 1);
  for (std::size_t j = 0; j < cols; j += 7) keep[j] = 0;
  for (const auto& mask : {std::vector<std::uint8_t>{}, keep}) {
    kernels::softmax_rows(rows, cols, x, mask, p);
    kernels::reference::softmax_rows(rows, cols, x, mask, r);
    EXPECT_TRUE(bit_equal(p, r));
  }

  const auto gain = random_vector(cols, 10), bias = random_vector(cols, 11);
  std::vector<double> pn(x.size()), rn(x.size()), pr(rows), rr(rows);
  kernels::layer_norm_rows(rows, cols, x, gain, bias, 1e-5, pn, pr, p);
  kernels::reference::layer_norm_rows(rows, cols, x, gain, bias, 1e-5, rn, rr, r);
  EXPECT_TRUE(bit_equal(p, r));
  EXPECT_TRUE(bit_equal(pn, rn));
  EXPECT_TRUE(bit_equal(pr, rr));
  kernels::set_threads(before);
}

TEST(Softmax, MaskedColumnsGetZero) {
  const std::vector<double> x = {1.0, 2.0, 3.0};
  const std::vector<std::uint8_t> keep = {1, 0, 1};
  std::vector<double> out(3);
  kernels::softmax_rows(1, 3, x, keep, out);
  EXPECT_EQ(out[1], 0.0);
  EXPECT_NEAR(out[0] + out[2], 1.0, 1e-15);
}

TEST(Threads, SetThreadsIsObserved) {
  const int before = kernels::max_threads();
  kernels::set_threads(1);
  EXPECT_EQ(kernels::max_threads(), 1);
  kernels::set_threads(before);
}

}  // namespace
}  // namespace sprune
