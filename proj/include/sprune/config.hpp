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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlohmann/json.hpp"
#include "sprune/model.hpp"
#include "sprune/vocab.hpp"

namespace sprune {

enum class Device { Cpu, Cuda };

struct GeneralConfig {
  Device device = Device::Cpu;
  std::filesystem::path output_dir = "pruned_model";

  // Throws ConfigError for devices this build cannot run on.
  void require_supported_device() const;
  friend bool operator==(const GeneralConfig&, const GeneralConfig&) = default;
};

struct VocabularyPruningConfig {
  std::size_t min_count = 1;
  bool prune_lm_head = true;
  friend bool operator==(const VocabularyPruningConfig&, const VocabularyPruningConfig&) = default;
};

enum class PruningMethod { Iterative, Mask };
enum class ScoreGranularity { Batch, Example };

struct TransformerPruningConfig {
  PruningMethod pruning_method = PruningMethod::Iterative;
  // Average FFN width / head count per layer after pruning. Required for
  // iterative pruning.
  std::optional<std::size_t> target_ffn_size;
  std::optional<std::size_t> target_num_of_heads;
  std::size_t n_iters = 1;
  bool ffn_even_masking = true;
  bool head_even_masking = true;
  std::size_t multiple_of = 1;
  // Self-supervised scoring against the unpruned model's predictions.
  bool use_logits = false;
  ScoreGranularity score_granularity = ScoreGranularity::Batch;

  void validate() const;
  friend bool operator==(const TransformerPruningConfig&, const TransformerPruningConfig&) = default;
};

nlohmann::json to_json(const GeneralConfig& c);
nlohmann::json to_json(const VocabularyPruningConfig& c);
nlohmann::json to_json(const TransformerPruningConfig& c);

// JSON config parsing. Unknown keys, wrong types and out-of-range values
// raise ValidationError naming the field; malformed JSON raises ParseError
// carrying the line number. Absent keys take their defaults.
template <typename Config>
Config parse_config_text(std::string_view text);
template <typename Config>
Config parse_config(const std::filesystem::path& path);

// Selects which model output the scorer treats as logits.
struct Adaptor {
  enum class Source { TaskLogits, LmLogits };
  Source source = Source::TaskLogits;

  // "task_logits" or "lm_logits".
  static Adaptor parse(std::string_view name);
  std::string name() const;
  Tensor logits(const Model& model, const TokenBatch& tokens, const Gates* gates = nullptr) const;
};

struct Batch {
  TokenBatch tokens;
  std::vector<std::int32_t> labels;  // empty when unlabeled
  std::vector<std::size_t> rows;     // 1-based source line numbers
};

struct Dataset {
  std::vector<Batch> batches;
  std::size_t batch_size = 0;
  std::string source;
  bool labeled = false;

  std::size_t num_examples() const;
  bool empty() const { return batches.empty(); }
};

struct DatasetOptions {
  std::size_t batch_size = 32;
  std::size_t max_len = 128;
  bool labeled = true;
  // Fraction of rows kept, drawn with `seed`; 1.0 keeps everything.
  double subsample = 1.0;
  std::uint64_t seed = 0;
};

// TSV rows: "label<TAB>text" when labeled, "text" otherwise. Each row becomes
// [CLS] tokens [SEP], truncated to max_len and padded per batch.
Dataset load_dataset(const std::filesystem::path& path, const Vocabulary& vocab, const DatasetOptions& options);

// Sorted indices of a seeded subsample of n rows.
std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed);

// Re-encodes every batch through a vocabulary mapping.
Dataset remap_dataset(const Dataset& data, const VocabMapping& mapping);

}  // namespace sprune
