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

#include "nlohmann/json.hpp"
#include "sprune/config.hpp"
#include "sprune/model.hpp"

namespace sprune {

enum class LossKind { SupervisedCrossEntropy, SelfSupervisedKl };

const char* loss_kind_name(LossKind kind);

struct LossSpec {
  LossKind kind = LossKind::SupervisedCrossEntropy;
  // Self-supervised mode: the unpruned model's logits for each batch, in
  // dataset order. Never differentiated.
  std::vector<Tensor> reference_logits;

  static LossSpec supervised() { return {}; }
  // Caches the model's current logits for every batch of `data`.
  static LossSpec self_supervised(const Model& model, const Dataset& data, const Adaptor& adaptor = {});
};

// Importance of every head and FFN neuron, indexed by the model's current
// (possibly pruned) widths.
struct ScoreTable {
  std::vector<std::vector<double>> head_scores;
  std::vector<std::vector<double>> ffn_scores;
  std::size_t num_examples_seen = 0;
  LossKind loss_kind = LossKind::SupervisedCrossEntropy;

  nlohmann::json to_json() const;
};

// Mean over rows of -log softmax(logits)[label].
Tensor cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels);

// Mean over rows of KL(softmax(q_logits) || softmax(p_logits)). Gradient
// flows only into p_logits; q_logits is treated as a constant.
Tensor kl_loss(const Tensor& q_logits, const Tensor& p_logits);

struct ScoringOptions {
  ScoreGranularity granularity = ScoreGranularity::Batch;
  Adaptor adaptor;
};

// Loss of one batch (or of rows [row_begin, row_begin+row_count) of it)
// under optional gates.
Tensor batch_loss(const Model& model, const Dataset& data, std::size_t batch_index, const LossSpec& loss,
                  const ScoringOptions& options, const Gates* gates, std::size_t row_begin = 0,
                  std::size_t row_count = static_cast<std::size_t>(-1));

// Importance score of each gated unit: |dL/d(gate)| at gate = 1, i.e. the
// absolute first-order change of the loss when the unit is zeroed. With batch
// granularity the absolute value is taken per batch and averaged over
// batches; with example granularity per example and averaged over examples.
// Batches may be processed in parallel; the merge order is fixed.
ScoreTable compute_scores(const Model& model, const Dataset& data, const LossSpec& loss,
                          const ScoringOptions& options = {});

void write_scores_json(const ScoreTable& scores, const std::filesystem::path& path);

}  // namespace sprune
