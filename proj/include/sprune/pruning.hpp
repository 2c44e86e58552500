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

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlohmann/json.hpp"
#include "sprune/config.hpp"
#include "sprune/model.hpp"
#include "sprune/scoring.hpp"
#include "sprune/vocab.hpp"

namespace sprune {

// Keep flags per layer for heads and FFN neurons, indexed against the widths
// the model had when pruning started.
struct PruningMask {
  std::vector<std::vector<bool>> heads;
  std::vector<std::vector<bool>> ffn;

  static PruningMask keep_all(const ModelConfig& config);
  static PruningMask from_json(const nlohmann::json& j);
  static PruningMask load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  std::vector<std::size_t> kept_heads() const;
  std::vector<std::size_t> kept_ffn() const;
  // True when every unit dropped by `earlier` is also dropped here.
  bool extends(const PruningMask& earlier) const;

  friend bool operator==(const PruningMask&, const PruningMask&) = default;
};

// Drops the lowest-scored kept units. Even masking takes quota/num_layers
// from every layer; uneven masking takes the globally lowest. Ties go to the
// lower layer, then the lower unit index. In uneven FFN mode with
// multiple_of > 1 every layer's kept width is a multiple of multiple_of, with
// the per-layer split chosen to keep the largest total score.
PruningMask select_targets(const ScoreTable& scores, const PruningMask& mask, std::size_t quota_heads,
                           std::size_t quota_ffn, const TransformerPruningConfig& config);

// Per-iteration quotas summing to `total`, remainder front-loaded.
std::vector<std::size_t> split_quota(std::size_t total, std::size_t n_iters);

// Removes every unit kept by `current` and dropped by `target` from a model
// whose widths match `current`.
void apply_mask(Model& model, const PruningMask& current, const PruningMask& target);

struct IterationLog {
  std::size_t iteration = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pruned_heads;  // (layer, original index)
  std::vector<std::pair<std::size_t, std::size_t>> pruned_ffn;
  std::vector<std::size_t> heads_per_layer;
  std::vector<std::size_t> ffn_per_layer;
  bool scored = false;
  double seconds = 0.0;
};

struct VocabularySummary {
  std::size_t initial_size = 0;
  std::size_t final_size = 0;
  std::size_t min_count = 0;
  bool lm_head_pruned = false;
};

struct PruneReport {
  std::string mode;
  ParameterCounts initial_parameters;
  ParameterCounts final_parameters;
  std::vector<std::size_t> initial_heads, initial_ffn;
  std::vector<std::size_t> final_heads, final_ffn;
  std::vector<IterationLog> iterations;
  std::optional<VocabularySummary> vocabulary;
  std::vector<std::string> warnings;
  double elapsed_seconds = 0.0;

  nlohmann::json to_json() const;
};

struct TransformerPruneOptions {
  Adaptor adaptor;
  // Required in mask mode.
  std::optional<PruningMask> mask;
  // Called after every iteration.
  std::function<void(const IterationLog&)> progress;
  // Called with each iteration's scores before selection.
  std::function<void(std::size_t iteration, const ScoreTable&)> on_scores;
};

struct TransformerPruneResult {
  PruneReport report;
  PruningMask mask;
};

// Iterative mode: n_iters rounds of score -> select -> surgery, recomputing
// scores on the already pruned model each round. Self-supervised scoring
// always compares against the model as it was on entry. Mask mode applies
// options.mask without scoring.
TransformerPruneResult transformer_prune(Model& model, const Dataset& data, const TransformerPruningConfig& config,
                                         const TransformerPruneOptions& options = {});

struct VocabPruneResult {
  Vocabulary vocab;
  VocabMapping mapping;
  PruneReport report;
};

// Keeps the special tokens and every token seen at least min_count times in
// the corpus, in the embedding and the tokenizer alike.
VocabPruneResult vocabulary_prune(Model& model, const Vocabulary& vocab, const std::filesystem::path& corpus,
                                  const VocabularyPruningConfig& config, bool pretokenized = false);

struct PipelineResult {
  Model model;
  Vocabulary vocab;
  PruneReport report;
};

// Transformer pruning, then vocabulary pruning, then an atomic save of
// checkpoint, vocab.txt and prune_report.json into general.output_dir.
PipelineResult pipeline_prune(Model model, const Vocabulary& vocab, const std::filesystem::path& corpus,
                              const Dataset& data, const GeneralConfig& general,
                              const VocabularyPruningConfig& vocab_config,
                              const TransformerPruningConfig& transformer_config,
                              const TransformerPruneOptions& options = {}, bool pretokenized = false);

// Writes checkpoint + vocab.txt + prune_report.json into a sibling temporary
// directory, then renames it over `directory`.
void save_outputs(const std::filesystem::path& directory, const Model& model, const Vocabulary& vocab,
                  const nlohmann::json& report);

}  // namespace sprune
