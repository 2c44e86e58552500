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
#include <string>
#include <utility>
#include <vector>

#include "nlohmann/json.hpp"
#include "sprune/mapping.hpp"
#include "sprune/tensor.hpp"

namespace sprune {

// Architecture of a post-layer-norm transformer encoder. Per-layer head
// counts and FFN widths may differ once a model has been pruned; the head
// width is fixed at construction and never changes.
struct ModelConfig {
  std::size_t num_layers = 0;
  std::size_t hidden_size = 0;
  std::size_t head_size = 0;
  std::vector<std::size_t> num_heads;
  std::vector<std::size_t> ffn_size;
  std::size_t vocab_size = 0;
  std::size_t max_seq_len = 0;
  std::size_t num_labels = 0;
  bool has_lm_head = false;
  bool lm_head_tied = true;
  // Output width of an untied LM head; equals vocab_size unless the head was
  // deliberately left unpruned during vocabulary pruning.
  std::size_t lm_head_size = 0;
  std::int32_t pad_token_id = 0;

  // Homogeneous config; head_size = hidden / heads.
  static ModelConfig uniform(std::size_t layers, std::size_t hidden, std::size_t heads, std::size_t ffn,
                             std::size_t vocab, std::size_t max_seq_len, std::size_t labels,
                             bool has_lm_head = false, bool lm_head_tied = true);

  void validate() const;
  std::size_t total_heads() const;
  std::size_t total_ffn() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// W^Q, W^K, W^V, W^O are [head_size × hidden]; the head output is
// softmax(Q·Kᵀ/√d)·V·W^O + b^O, with b^O removed together with the head.
struct AttentionHead {
  Tensor query_weight, query_bias;
  Tensor key_weight, key_bias;
  Tensor value_weight, value_bias;
  Tensor output_weight, output_bias;
};

struct EncoderLayer {
  std::vector<AttentionHead> heads;
  Tensor ffn_in_weight;   // [hidden × ffn]
  Tensor ffn_in_bias;     // [ffn]
  Tensor ffn_out_weight;  // [ffn × hidden]
  Tensor ffn_out_bias;    // [hidden]
  Tensor attention_norm_gain, attention_norm_bias;
  Tensor ffn_norm_gain, ffn_norm_bias;

  std::size_t ffn_size() const { return ffn_in_bias.numel(); }
};

struct Model {
  ModelConfig config;
  Tensor word_embedding;      // [vocab × hidden]
  Tensor position_embedding;  // [max_seq_len × hidden]
  std::vector<EncoderLayer> layers;
  Tensor classifier_weight;  // [hidden × labels]
  Tensor classifier_bias;    // [labels]
  Tensor lm_head_weight;     // [hidden × lm_head_size]; undefined when tied or absent

  // Stable checkpoint order.
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  void set_requires_grad(bool requires_grad);
  void zero_grad();
  // Same values, fresh gradient slots, nothing requires a gradient.
  Model detached() const;
  // Checks tensor shapes against the config.
  void validate() const;
};

// Expected parameter names and shapes for a config, in checkpoint order.
std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& config);

// Token ids laid out [batch × seq_len].
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::vector<std::int32_t> ids;

  std::span<const std::int32_t> row(std::size_t i) const { return std::span(ids).subspan(i * seq_len, seq_len); }
  TokenBatch rows(std::size_t begin, std::size_t count) const;
};

// Multiplicative gates on head outputs and post-GeLU FFN activations; the
// scaling handles for importance scores. One vector per layer.
struct Gates {
  std::vector<Tensor> heads;
  std::vector<Tensor> ffn;

  static Gates ones(const ModelConfig& config, bool requires_grad = false);
};

// Hidden states [batch × seq_len × hidden].
Tensor encoder_forward(const Model& model, const TokenBatch& tokens, const Gates* gates = nullptr);
// Hidden states of one sequence, [seq_len × hidden].
Tensor encode_sequence(const Model& model, std::span<const std::int32_t> ids, const Gates* gates = nullptr);
// Classifier logits read from position 0, [batch × labels].
Tensor task_forward(const Model& model, const TokenBatch& tokens, const Gates* gates = nullptr);
// LM head logits for every position, [(batch·seq_len) × lm_head_size].
Tensor lm_forward(const Model& model, const TokenBatch& tokens, const Gates* gates = nullptr);

// Structural surgery. Surviving units keep their relative order.
void remove_heads(Model& model, std::size_t layer, std::span<const std::size_t> head_indices);
void remove_ffn_neurons(Model& model, std::size_t layer, std::span<const std::size_t> neuron_indices);
// Compacts the embedding to kept_ids order. A tied LM head follows the
// embedding; with prune_lm_head == false a tied head is first untied so its
// outputs stay over the old vocabulary.
VocabMapping remove_vocab_rows(Model& model, std::span<const std::int32_t> kept_ids, bool prune_lm_head = true);

struct ParameterCounts {
  std::size_t embedding = 0;    // word + position
  std::size_t heads_total = 0;  // all attention head weights and biases
  std::size_t ffn_total = 0;
  std::size_t layer_norm = 0;
  std::size_t transformer = 0;  // heads + ffn + layer norms
  std::size_t task_head = 0;    // classifier + untied LM head
  std::size_t total = 0;

  friend bool operator==(const ParameterCounts&, const ParameterCounts&) = default;
};

ParameterCounts count_parameters(const ModelConfig& config);
// Sums the element counts of the stored tensors.
ParameterCounts count_parameters(const Model& model);

// Deterministic random weights (identical for identical config and seed).
Model random_model(const ModelConfig& config, std::uint64_t seed);

}  // namespace sprune
