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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sprune/config.hpp"
#include "sprune/model.hpp"
#include "sprune/random.hpp"
#include "sprune/tensor.hpp"

namespace sprune::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false, double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

inline Tensor with_value(const Tensor& t, std::size_t i, double value) {
  std::vector<double> v(t.data().begin(), t.data().end());
  v[i] = value;
  return Tensor(t.shape(), std::move(v));
}

inline bool close(double analytic, double numeric, double rel, double abs) {
  const double diff = std::abs(analytic - numeric);
  return diff <= abs || diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

// Compares tape gradients of a scalar function against central differences
// for every element of every input.
inline void expect_gradients_match(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                                   const std::vector<Tensor>& inputs, double h = 1e-5, double rel = 1e-4,
                                   double abs = 1e-7) {
  std::vector<Tensor> leaves;
  for (const auto& t : inputs) leaves.push_back(t.detach(true));
  Tape tape;
  {
    Tape::Recording rec(tape);
    backward(tape, f(leaves));
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    ASSERT_TRUE(leaves[k].has_grad()) << "input " << k << " received no gradient";
    const auto grad = leaves[k].grad();
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      auto shifted = inputs;
      shifted[k] = with_value(inputs[k], i, inputs[k][i] + h);
      const double up = f(shifted).item();
      shifted[k] = with_value(inputs[k], i, inputs[k][i] - h);
      const double down = f(shifted).item();
      const double numeric = (up - down) / (2 * h);
      EXPECT_TRUE(close(grad[i], numeric, rel, abs))
          << "input " << k << " element " << i << ": analytic " << grad[i] << " numeric " << numeric;
    }
  }
}

inline ModelConfig toy_config(std::size_t labels = 3, bool lm_head = false, bool tied = true) {
  return ModelConfig::uniform(2, 32, 4, 64, 50, 16, labels, lm_head, tied);
}

inline TokenBatch random_tokens(std::size_t batch, std::size_t seq, std::size_t vocab, Rng& rng) {
  TokenBatch t{batch, seq, {}};
  for (std::size_t i = 0; i < batch * seq; ++i) t.ids.push_back(static_cast<std::int32_t>(1 + rng.below(vocab - 1)));
  return t;
}

inline Dataset random_dataset(Rng& rng, std::size_t batches, std::size_t batch_size, std::size_t seq, std::size_t vocab,
                              std::size_t labels) {
  Dataset d;
  d.batch_size = batch_size;
  d.labeled = true;
  for (std::size_t b = 0; b < batches; ++b) {
    Batch batch;
    batch.tokens = random_tokens(batch_size, seq, vocab, rng);
    for (std::size_t i = 0; i < batch_size; ++i) {
      batch.labels.push_back(static_cast<std::int32_t>(rng.below(labels)));
      batch.rows.push_back(b * batch_size + i + 1);
    }
    d.batches.push_back(std::move(batch));
  }
  return d;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  EXPECT_EQ(a.shape(), b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("sprune-" + tag + "-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
             std::to_string(counter++) + "-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace sprune::testing
