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

#include "sprune/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "sprune/errors.hpp"
#include "sprune/random.hpp"

namespace sprune {
using nlohmann::json;

namespace {

// Reads typed fields from a JSON object and rejects leftovers.
class FieldReader {
 public:
  FieldReader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw ValidationError(context_ + ": expected a JSON object");
  }

  std::optional<std::size_t> count(const std::string& key, std::size_t min_value) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) fail(key, "must be an integer");
    if (!v->is_number_unsigned() && v->get<std::int64_t>() < 0) fail(key, "must be >= " + std::to_string(min_value));
    const auto value = v->get<std::uint64_t>();
    if (value < min_value) fail(key, "must be >= " + std::to_string(min_value));
    return static_cast<std::size_t>(value);
  }

  std::optional<bool> flag(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) fail(key, "must be true or false");
    return v->get<bool>();
  }

  std::optional<std::string> choice(const std::string& key, const std::vector<std::string>& allowed) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    std::string joined;
    for (const auto& a : allowed) joined += (joined.empty() ? "" : ", ") + a;
    if (!v->is_string()) fail(key, "must be one of: " + joined);
    auto s = v->get<std::string>();
    if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) fail(key, "must be one of: " + joined);
    return s;
  }

  std::optional<std::string> text(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) fail(key, "must be a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError(context_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ValidationError(context_ + ": field '" + key + "' " + why);
  }

  const json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

json parse_json_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ParseError("malformed JSON at line " + std::to_string(line) + ": " + e.what(), line);
  }
}

GeneralConfig general_from(const json& j) {
  FieldReader r(j, "general config");
  GeneralConfig c;
  if (auto d = r.choice("device", {"cpu", "cuda"})) c.device = *d == "cuda" ? Device::Cuda : Device::Cpu;
  if (auto o = r.text("output_dir")) {
    if (o->empty()) throw ValidationError("general config: field 'output_dir' must not be empty");
    c.output_dir = *o;
  }
  r.finish();
  return c;
}

VocabularyPruningConfig vocab_from(const json& j) {
  FieldReader r(j, "vocabulary pruning config");
  VocabularyPruningConfig c;
  if (auto v = r.count("min_count", 0)) c.min_count = *v;
  if (auto v = r.flag("prune_lm_head")) c.prune_lm_head = *v;
  r.finish();
  return c;
}

TransformerPruningConfig transformer_from(const json& j) {
  FieldReader r(j, "transformer pruning config");
  TransformerPruningConfig c;
  if (auto m = r.choice("pruning_method", {"iterative", "mask"})) {
    c.pruning_method = *m == "mask" ? PruningMethod::Mask : PruningMethod::Iterative;
  }
  c.target_ffn_size = r.count("target_ffn_size", 1);
  c.target_num_of_heads = r.count("target_num_of_heads", 1);
  if (auto v = r.count("n_iters", 1)) c.n_iters = *v;
  if (auto v = r.flag("ffn_even_masking")) c.ffn_even_masking = *v;
  if (auto v = r.flag("head_even_masking")) c.head_even_masking = *v;
  if (auto v = r.count("multiple_of", 1)) c.multiple_of = *v;
  if (auto v = r.flag("use_logits")) c.use_logits = *v;
  if (auto g = r.choice("score_granularity", {"batch", "example"})) {
    c.score_granularity = *g == "example" ? ScoreGranularity::Example : ScoreGranularity::Batch;
  }
  r.finish();
  c.validate();
  return c;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void GeneralConfig::require_supported_device() const {
  if (device == Device::Cuda) {
    throw ConfigError("device 'cuda' is unsupported in this build; use 'cpu'");
  }
}

void TransformerPruningConfig::validate() const {
  if (n_iters < 1) throw ValidationError("transformer pruning config: field 'n_iters' must be >= 1");
  if (multiple_of < 1) throw ValidationError("transformer pruning config: field 'multiple_of' must be >= 1");
  if (multiple_of > 1 && ffn_even_masking) {
    throw ValidationError(
        "transformer pruning config: field 'multiple_of' > 1 requires 'ffn_even_masking' to be false");
  }
  if (pruning_method == PruningMethod::Iterative) {
    if (!target_ffn_size) throw ValidationError("transformer pruning config: iterative pruning needs 'target_ffn_size'");
    if (!target_num_of_heads) {
      throw ValidationError("transformer pruning config: iterative pruning needs 'target_num_of_heads'");
    }
  }
  if (target_ffn_size && *target_ffn_size < 1) {
    throw ValidationError("transformer pruning config: field 'target_ffn_size' must be >= 1");
  }
  if (target_num_of_heads && *target_num_of_heads < 1) {
    throw ValidationError("transformer pruning config: field 'target_num_of_heads' must be >= 1");
  }
}

json to_json(const GeneralConfig& c) {
  return {{"device", c.device == Device::Cuda ? "cuda" : "cpu"}, {"output_dir", c.output_dir.string()}};
}

json to_json(const VocabularyPruningConfig& c) {
  return {{"min_count", c.min_count}, {"prune_lm_head", c.prune_lm_head}};
}

json to_json(const TransformerPruningConfig& c) {
  json j = {{"pruning_method", c.pruning_method == PruningMethod::Mask ? "mask" : "iterative"},
            {"n_iters", c.n_iters},
            {"ffn_even_masking", c.ffn_even_masking},
            {"head_even_masking", c.head_even_masking},
            {"multiple_of", c.multiple_of},
            {"use_logits", c.use_logits},
            {"score_granularity", c.score_granularity == ScoreGranularity::Example ? "example" : "batch"}};
  if (c.target_ffn_size) j["target_ffn_size"] = *c.target_ffn_size;
  if (c.target_num_of_heads) j["target_num_of_heads"] = *c.target_num_of_heads;
  return j;
}

template <>
GeneralConfig parse_config_text<GeneralConfig>(std::string_view text) {
  return general_from(parse_json_text(text));
}
template <>
VocabularyPruningConfig parse_config_text<VocabularyPruningConfig>(std::string_view text) {
  return vocab_from(parse_json_text(text));
}
template <>
TransformerPruningConfig parse_config_text<TransformerPruningConfig>(std::string_view text) {
  return transformer_from(parse_json_text(text));
}

template <typename Config>
Config parse_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_config_text<Config>(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

template GeneralConfig parse_config<GeneralConfig>(const std::filesystem::path&);
template VocabularyPruningConfig parse_config<VocabularyPruningConfig>(const std::filesystem::path&);
template TransformerPruningConfig parse_config<TransformerPruningConfig>(const std::filesystem::path&);

// ---------------------------------------------------------------- adaptor

Adaptor Adaptor::parse(std::string_view name) {
  if (name == "task_logits") return {Source::TaskLogits};
  if (name == "lm_logits") return {Source::LmLogits};
  throw ValidationError("adaptor must be 'task_logits' or 'lm_logits', got '" + std::string(name) + "'");
}

std::string Adaptor::name() const { return source == Source::LmLogits ? "lm_logits" : "task_logits"; }

Tensor Adaptor::logits(const Model& model, const TokenBatch& tokens, const Gates* gates) const {
  return source == Source::LmLogits ? lm_forward(model, tokens, gates) : task_forward(model, tokens, gates);
}

// ---------------------------------------------------------------- dataset

std::size_t Dataset::num_examples() const {
  std::size_t n = 0;
  for (const auto& b : batches) n += b.tokens.batch;
  return n;
}

std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ContractError("subsample fraction must be in (0, 1], got " + std::to_string(fraction));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (fraction == 1.0 || n == 0) return idx;
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
  idx.resize(std::min(count, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Dataset load_dataset(const std::filesystem::path& path, const Vocabulary& vocab, const DatasetOptions& options) {
  if (options.batch_size == 0) throw ContractError("batch_size must be positive");
  if (options.max_len < 2) throw ContractError("max_len must leave room for [CLS] and [SEP]");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read dataset " + path.string());

  struct Row {
    std::size_t line;
    std::int32_t label;
    std::vector<std::int32_t> ids;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Row row{line_no, -1, {}};
    std::string_view text = line;
    if (options.labeled) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw DataError(path.string() + ": row " + std::to_string(line_no) + " has no label column");
      }
      const std::string_view label = std::string_view(line).substr(0, tab);
      std::int32_t value = 0;
      auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), value);
      if (ec != std::errc() || ptr != label.data() + label.size() || value < 0) {
        throw DataError(path.string() + ": row " + std::to_string(line_no) + " label '" + std::string(label) +
                        "' is not a non-negative integer");
      }
      row.label = value;
      text = std::string_view(line).substr(tab + 1);
    }
    auto pieces = vocab.tokenize(text);
    if (pieces.size() > options.max_len - 2) pieces.resize(options.max_len - 2);
    row.ids.reserve(pieces.size() + 2);
    row.ids.push_back(vocab.cls_id());
    row.ids.insert(row.ids.end(), pieces.begin(), pieces.end());
    row.ids.push_back(vocab.sep_id());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ContractError("dataset " + path.string() + " has no rows");

  const auto keep = subsample_indices(rows.size(), options.subsample, options.seed);

  Dataset ds;
  ds.batch_size = options.batch_size;
  ds.source = path.string();
  ds.labeled = options.labeled;
  for (std::size_t start = 0; start < keep.size(); start += options.batch_size) {
    const std::size_t end = std::min(keep.size(), start + options.batch_size);
    std::size_t width = 0;
    for (std::size_t i = start; i < end; ++i) width = std::max(width, rows[keep[i]].ids.size());
    Batch b;
    b.tokens.batch = end - start;
    b.tokens.seq_len = width;
    b.tokens.ids.assign(b.tokens.batch * width, vocab.pad_id());
    for (std::size_t i = start; i < end; ++i) {
      const auto& r = rows[keep[i]];
      std::copy(r.ids.begin(), r.ids.end(), b.tokens.ids.begin() + static_cast<std::ptrdiff_t>((i - start) * width));
      if (options.labeled) b.labels.push_back(r.label);
      b.rows.push_back(r.line);
    }
    ds.batches.push_back(std::move(b));
  }
  return ds;
}

Dataset remap_dataset(const Dataset& data, const VocabMapping& mapping) {
  Dataset out = data;
  for (auto& b : out.batches) b.tokens.ids = mapping.map(b.tokens.ids);
  return out;
}

}  // namespace sprune
