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

#include <cstdint>
#include <span>
#include <vector>

#include "sprune/tensor.hpp"

// Differentiable tensor operations. Each records its gradient rule on the
// thread's active tape when any input requires a gradient.
namespace sprune::ops {

// [m×k]·[k×p] -> [m×p]
Tensor matmul(const Tensor& a, const Tensor& b);
// [m×k]·[p×k]ᵀ -> [m×p]
Tensor matmul_nt(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
// m[r×c] + row[c], broadcast over rows.
Tensor add_row(const Tensor& m, const Tensor& row);
Tensor scale(const Tensor& m, double factor);
// gates[index]·m, where gates is a gate vector.
Tensor scale_by(const Tensor& m, const Tensor& gates, std::size_t index);
// m[r×c] ⊙ gates[c], broadcast over rows.
Tensor mul_cols(const Tensor& m, const Tensor& gates);

Tensor softmax_rows(const Tensor& m);
// Columns whose key_keep entry is 0 receive probability 0.
Tensor softmax_rows(const Tensor& m, std::span<const std::uint8_t> key_keep);
Tensor gelu(const Tensor& m);
Tensor layer_norm(const Tensor& m, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

// Rows `ids` of table[V×d] -> [n×d]. Out-of-range ids raise IndexError.
Tensor gather_rows(const Tensor& table, std::span<const std::int32_t> ids);
Tensor slice_rows(const Tensor& m, std::size_t begin, std::size_t count);
Tensor concat_rows(std::span<const Tensor> parts);
// Equal-shaped 2-D tensors -> 3-D [parts×rows×cols].
Tensor stack(std::span<const Tensor> parts);
// Sum of all elements as a [1] tensor.
Tensor sum(const Tensor& m);

}  // namespace sprune::ops
