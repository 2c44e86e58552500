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
#include <vector>

#include "nlohmann/json.hpp"
#include "sprune/config.hpp"
#include "sprune/model.hpp"
#include "sprune/scoring.hpp"
#include "sprune/vocab.hpp"

namespace sprune {

// Transformer parameters of `config` relative to `reference` (1.0 = same).
double transformer_ratio(const ModelConfig& config, const ModelConfig& reference);

// Parameter table: embeddings, per-layer heads/FFN, task head and totals,
// with percentages against `reference` when given.
std::string summary(const ModelConfig& config, const ModelConfig* reference = nullptr);
nlohmann::json summary_json(const ModelConfig& config, const ModelConfig* reference = nullptr);

struct TimingOptions {
  std::size_t batch_size = 8;
  std::size_t seq_len = 128;
  std::size_t warmup_rounds = 3;
  std::size_t measure_rounds = 10;
  std::uint64_t seed = 0;
};

struct TimingResult {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double median_of_means_ms = 0.0;
  std::vector<double> samples_ms;

  nlohmann::json to_json() const;
};

// Wall-clock latency of one task forward pass over fixed random ids.
TimingResult inference_time(const Model& model, const TimingOptions& options = {});

struct FixtureSpec {
  std::size_t layers = 2;
  std::size_t hidden = 32;
  std::size_t heads = 4;
  std::size_t ffn = 64;
  // 0 derives hidden / heads.
  std::size_t head_size = 0;
  std::size_t vocab = 50;
  std::size_t max_seq_len = 64;
  std::size_t labels = 3;
  bool lm_head = false;
  bool lm_head_tied = true;
  std::uint64_t seed = 0;
  std::size_t corpus_lines = 40;
  std::size_t dataset_rows = 24;

  ModelConfig model_config() const;
};

// Writes <dir>/model (checkpoint + vocab.txt), <dir>/corpus.txt and
// <dir>/dev.tsv. Identical specs give identical bytes.
void make_fixture(const FixtureSpec& spec, const std::filesystem::path& dir);

// Tokens of a fixture vocabulary, specials first.
std::vector<std::string> fixture_tokens(std::size_t vocab_size);

// Spearman rank correlation with average ranks for ties; empty when either
// side is constant.
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);

struct StudyOptions {
  std::vector<double> fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  DatasetOptions data;
  ScoringOptions scoring;
};

// Supervised scores on seeded subsamples of a dataset and reports each
// subsample's rank correlation with the full-data scores.
nlohmann::json score_study(const Model& model, const Vocabulary& vocab, const std::filesystem::path& dataset,
                           const StudyOptions& options);

}  // namespace sprune
