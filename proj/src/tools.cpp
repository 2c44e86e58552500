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

#include "sprune/tools.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sprune/checkpoint.hpp"
#include "sprune/errors.hpp"
#include "sprune/random.hpp"

namespace sprune {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string percent(std::size_t part, std::size_t whole) {
  if (whole == 0) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * static_cast<double>(part) / static_cast<double>(whole));
  return buf;
}

std::size_t layer_heads_params(const ModelConfig& c, std::size_t l) {
  return c.num_heads[l] * (4 * c.head_size * c.hidden_size + 3 * c.head_size + c.hidden_size);
}

std::size_t layer_ffn_params(const ModelConfig& c, std::size_t l) {
  return 2 * c.hidden_size * c.ffn_size[l] + c.ffn_size[l] + c.hidden_size;
}

double mean_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += v[i];
  return s / static_cast<double>(end - begin);
}

std::string letters(std::size_t i) {
  std::string s;
  do {
    s.insert(s.begin(), static_cast<char>('a' + i % 26));
    i /= 26;
  } while (i-- > 0);
  return s;
}

std::vector<double> flatten(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out;
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

double transformer_ratio(const ModelConfig& config, const ModelConfig& reference) {
  const auto ref = count_parameters(reference).transformer;
  if (ref == 0) throw ContractError("reference model has no transformer parameters");
  return static_cast<double>(count_parameters(config).transformer) / static_cast<double>(ref);
}

json summary_json(const ModelConfig& config, const ModelConfig* reference) {
  const ParameterCounts p = count_parameters(config);
  json layers = json::array();
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    layers.push_back({{"layer", l},
                      {"heads", config.num_heads[l]},
                      {"ffn_size", config.ffn_size[l]},
                      {"head_parameters", layer_heads_params(config, l)},
                      {"ffn_parameters", layer_ffn_params(config, l)}});
  }
  json j = {{"embedding", p.embedding}, {"heads", p.heads_total},       {"ffn", p.ffn_total},
            {"layer_norm", p.layer_norm}, {"transformer", p.transformer}, {"task_head", p.task_head},
            {"total", p.total},           {"vocab_size", config.vocab_size}, {"layers", layers}};
  if (reference) {
    const ParameterCounts r = count_parameters(*reference);
    auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? json(nullptr) : json(double(a) / double(b)); };
    j["reference"] = {{"transformer", r.transformer}, {"total", r.total}, {"embedding", r.embedding}};
    j["transformer_ratio"] = ratio(p.transformer, r.transformer);
    j["embedding_ratio"] = ratio(p.embedding, r.embedding);
    j["total_ratio"] = ratio(p.total, r.total);
  }
  return j;
}

std::string summary(const ModelConfig& config, const ModelConfig* reference) {
  const ParameterCounts p = count_parameters(config);
  const ParameterCounts r = reference ? count_parameters(*reference) : p;
  std::ostringstream out;
  char line[160];
  auto row = [&](const std::string& name, std::size_t n, std::size_t ref) {
    std::snprintf(line, sizeof(line), "%-22s %14zu %10s %10s\n", name.c_str(), n, percent(n, p.total).c_str(),
                  reference ? percent(n, ref).c_str() : "");
    out << line;
  };
  std::snprintf(line, sizeof(line), "%-22s %14s %10s %10s\n", "component", "parameters", "of total",
                reference ? "of ref" : "");
  out << line;
  row("embedding", p.embedding, r.embedding);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::string tag = "layer " + std::to_string(l);
    const bool paired = reference && l < reference->num_layers;
    row(tag + " heads(" + std::to_string(config.num_heads[l]) + ")", layer_heads_params(config, l),
        paired ? layer_heads_params(*reference, l) : 0);
    row(tag + " ffn(" + std::to_string(config.ffn_size[l]) + ")", layer_ffn_params(config, l),
        paired ? layer_ffn_params(*reference, l) : 0);
  }
  row("layer norms", p.layer_norm, r.layer_norm);
  row("heads total", p.heads_total, r.heads_total);
  row("ffn total", p.ffn_total, r.ffn_total);
  row("transformer", p.transformer, r.transformer);
  row("task head", p.task_head, r.task_head);
  row("total", p.total, r.total);
  if (reference) {
    std::snprintf(line, sizeof(line), "transformer size vs reference: %.2f%%\n",
                  100.0 * transformer_ratio(config, *reference));
    out << line;
  }
  return out.str();
}

json TimingResult::to_json() const {
  return {{"mean_ms", mean_ms}, {"std_ms", std_ms}, {"median_of_means_ms", median_of_means_ms},
          {"samples_ms", samples_ms}};
}

TimingResult inference_time(const Model& model, const TimingOptions& options) {
  if (options.measure_rounds == 0) throw ContractError("inference_time needs at least one measured round");
  if (options.seq_len == 0 || options.batch_size == 0) throw ContractError("inference_time needs a non-empty batch");
  if (options.seq_len > model.config.max_seq_len) {
    throw ContractError("seq_len " + std::to_string(options.seq_len) + " exceeds max_seq_len " +
                        std::to_string(model.config.max_seq_len));
  }
  Rng rng(options.seed);
  TokenBatch tokens{options.batch_size, options.seq_len, {}};
  const auto V = static_cast<std::uint64_t>(model.config.vocab_size);
  for (std::size_t i = 0; i < options.batch_size * options.seq_len; ++i) {
    auto id = static_cast<std::int32_t>(rng.below(V));
    if (id == model.config.pad_token_id && V > 1) id = static_cast<std::int32_t>((id + 1) % V);
    tokens.ids.push_back(id);
  }
  using Clock = std::chrono::steady_clock;
  volatile double sink = 0.0;
  for (std::size_t i = 0; i < options.warmup_rounds; ++i) sink = sink + task_forward(model, tokens)[0];
  TimingResult r;
  for (std::size_t i = 0; i < options.measure_rounds; ++i) {
    const auto t0 = Clock::now();
    const Tensor logits = task_forward(model, tokens);
    r.samples_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    sink = sink + logits[0];
  }
  const std::size_t n = r.samples_ms.size();
  r.mean_ms = mean_of(r.samples_ms, 0, n);
  if (n > 1) {
    double ss = 0.0;
    for (double x : r.samples_ms) ss += (x - r.mean_ms) * (x - r.mean_ms);
    r.std_ms = std::sqrt(ss / static_cast<double>(n - 1));
  }
  // Contiguous groups, at most five, each averaged; the median of those.
  const std::size_t groups = std::min<std::size_t>(5, n);
  std::vector<double> means;
  for (std::size_t g = 0; g < groups; ++g) means.push_back(mean_of(r.samples_ms, g * n / groups, (g + 1) * n / groups));
  std::sort(means.begin(), means.end());
  r.median_of_means_ms =
      groups % 2 == 1 ? means[groups / 2] : 0.5 * (means[groups / 2 - 1] + means[groups / 2]);
  return r;
}

ModelConfig FixtureSpec::model_config() const {
  if (heads == 0) throw ConfigError("fixture needs at least one head");
  ModelConfig c = ModelConfig::uniform(layers, hidden, heads, ffn, vocab, max_seq_len, labels, lm_head, lm_head_tied);
  if (head_size != 0) c.head_size = head_size;
  c.validate();
  return c;
}

std::vector<std::string> fixture_tokens(std::size_t vocab_size) {
  const SpecialTokens specials;
  const auto named = specials.all();
  if (vocab_size < named.size() + 1) throw ConfigError("fixture vocabulary needs room beyond the special tokens");
  std::vector<std::string> tokens(named.begin(), named.end());
  for (std::size_t i = 0; tokens.size() < vocab_size; ++i) {
    tokens.push_back(i % 5 == 4 ? "##" + letters(i) : letters(i));
  }
  return tokens;
}

void make_fixture(const FixtureSpec& spec, const fs::path& dir) {
  const ModelConfig config = spec.model_config();
  const std::vector<std::string> tokens = fixture_tokens(spec.vocab);
  const Model model = random_model(config, spec.seed);

  std::vector<std::string> words, pieces;
  for (std::size_t i = SpecialTokens{}.all().size(); i < tokens.size(); ++i) {
    if (tokens[i].starts_with("##")) {
      pieces.push_back(tokens[i].substr(2));
    } else {
      words.push_back(tokens[i]);
    }
  }
  // Only the first 70% of words ever occur, so vocabulary pruning has work.
  const std::size_t used = std::max<std::size_t>(1, words.size() * 7 / 10);
  Rng rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  auto sentence = [&]() {
    const std::size_t n = 3 + rng.below(10);
    std::string s;
    for (std::size_t k = 0; k < n; ++k) {
      const double u = rng.uniform();
      std::string w = words[static_cast<std::size_t>(u * u * static_cast<double>(used))];
      if (!pieces.empty() && rng.uniform() < 0.3) w += pieces[rng.below(pieces.size())];
      if (k) s += ' ';
      s += w;
    }
    return s;
  };

  fs::create_directories(dir / "model");
  save_model(model, dir / "model");
  Vocabulary(tokens).save(dir / "model" / "vocab.txt");
  std::ofstream corpus(dir / "corpus.txt", std::ios::binary | std::ios::trunc);
  for (std::size_t i = 0; i < spec.corpus_lines; ++i) corpus << sentence() << '\n';
  std::ofstream dev(dir / "dev.tsv", std::ios::binary | std::ios::trunc);
  for (std::size_t i = 0; i < spec.dataset_rows; ++i) dev << rng.below(spec.labels) << '\t' << sentence() << '\n';
  if (!corpus || !dev) throw IoError("cannot write fixture data under " + dir.string());
}

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("spearman: lengths differ");
  if (a.size() < 2) return std::nullopt;
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double ma = mean_of(ra, 0, ra.size()), mb = mean_of(rb, 0, rb.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

json score_study(const Model& model, const Vocabulary& vocab, const fs::path& dataset, const StudyOptions& options) {
  DatasetOptions full_opts = options.data;
  full_opts.labeled = true;
  full_opts.subsample = 1.0;
  const Dataset full = load_dataset(dataset, vocab, full_opts);
  const ScoreTable reference = compute_scores(model, full, LossSpec::supervised(), options.scoring);
  const auto ref_heads = flatten(reference.head_scores), ref_ffn = flatten(reference.ffn_scores);

  json runs = json::array(), per_fraction = json::array();
  for (double fraction : options.fractions) {
    double head_sum = 0.0, ffn_sum = 0.0;
    std::size_t head_n = 0, ffn_n = 0;
    for (std::uint64_t seed : options.seeds) {
      DatasetOptions opts = full_opts;
      opts.subsample = fraction;
      opts.seed = seed;
      const Dataset subset = load_dataset(dataset, vocab, opts);
      const ScoreTable scores = compute_scores(model, subset, LossSpec::supervised(), options.scoring);
      std::vector<std::size_t> rows;
      for (const auto& b : subset.batches) rows.insert(rows.end(), b.rows.begin(), b.rows.end());
      const auto h = spearman(flatten(scores.head_scores), ref_heads);
      const auto f = spearman(flatten(scores.ffn_scores), ref_ffn);
      if (h) head_sum += *h, ++head_n;
      if (f) ffn_sum += *f, ++ffn_n;
      runs.push_back({{"fraction", fraction},
                      {"seed", seed},
                      {"num_examples", subset.num_examples()},
                      {"rows", rows},
                      {"head_spearman", optional_json(h)},
                      {"ffn_spearman", optional_json(f)}});
    }
    per_fraction.push_back({{"fraction", fraction},
                            {"mean_head_spearman", head_n ? json(head_sum / double(head_n)) : json(nullptr)},
                            {"mean_ffn_spearman", ffn_n ? json(ffn_sum / double(ffn_n)) : json(nullptr)}});
  }
  return {{"dataset", dataset.string()},
          {"num_examples", full.num_examples()},
          {"granularity", options.scoring.granularity == ScoreGranularity::Batch ? "batch" : "example"},
          {"reference_scores", reference.to_json()},
          {"runs", runs},
          {"fractions", per_fraction}};
}

}  // namespace sprune
