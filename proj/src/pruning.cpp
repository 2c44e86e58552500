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

#include "sprune/pruning.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <tuple>

#include "sprune/checkpoint.hpp"
#include "sprune/errors.hpp"

namespace sprune {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::vector<bool>> full_rows(const std::vector<std::size_t>& widths) {
  std::vector<std::vector<bool>> rows;
  for (std::size_t w : widths) rows.emplace_back(w, true);
  return rows;
}

std::vector<std::size_t> count_kept(const std::vector<std::vector<bool>>& rows) {
  std::vector<std::size_t> out;
  for (const auto& r : rows) out.push_back(static_cast<std::size_t>(std::count(r.begin(), r.end(), true)));
  return out;
}

std::vector<std::vector<bool>> rows_from_json(const json& j, const char* field) {
  if (!j.contains(field)) throw ValidationError(std::string("mask: field '") + field + "' missing from mask");
  const json& rows = j.at(field);
  if (!rows.is_array()) throw ValidationError(std::string("mask: field '") + field + "' expected an array of per-layer arrays");
  std::vector<std::vector<bool>> out;
  for (const json& row : rows) {
    if (!row.is_array()) throw ValidationError(std::string("mask: field '") + field + "' expected an array of per-layer arrays");
    std::vector<bool> flags;
    for (const json& v : row) {
      if (v.is_boolean()) {
        flags.push_back(v.get<bool>());
      } else if (v.is_number_integer() && (v.get<std::int64_t>() == 0 || v.get<std::int64_t>() == 1)) {
        flags.push_back(v.get<std::int64_t>() == 1);
      } else {
        throw ValidationError(std::string("mask: field '") + field + "' entries must be 0 or 1");
      }
    }
    out.push_back(std::move(flags));
  }
  return out;
}

json rows_to_json(const std::vector<std::vector<bool>>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json row = json::array();
    for (bool b : r) row.push_back(b ? 1 : 0);
    out.push_back(std::move(row));
  }
  return out;
}

// A unit that is still kept, with its score under the current model.
struct Candidate {
  double score;
  std::size_t layer;
  std::size_t unit;  // original index
};

bool drop_before(const Candidate& a, const Candidate& b) {
  return std::tie(a.score, a.layer, a.unit) < std::tie(b.score, b.layer, b.unit);
}

// Candidates per layer, in drop order.
std::vector<std::vector<Candidate>> layer_candidates(const std::vector<std::vector<double>>& scores,
                                                     const std::vector<std::vector<bool>>& mask, const char* what) {
  if (scores.size() != mask.size()) {
    throw ShapeError(std::string("select_targets: ") + what + " scores cover " + std::to_string(scores.size()) +
                     " layers, the mask " + std::to_string(mask.size()));
  }
  std::vector<std::vector<Candidate>> out(mask.size());
  for (std::size_t l = 0; l < mask.size(); ++l) {
    std::size_t current = 0;
    for (std::size_t u = 0; u < mask[l].size(); ++u) {
      if (!mask[l][u]) continue;
      if (current >= scores[l].size()) break;
      out[l].push_back({scores[l][current], l, u});
      ++current;
    }
    const std::size_t kept = static_cast<std::size_t>(std::count(mask[l].begin(), mask[l].end(), true));
    if (scores[l].size() != kept) {
      throw ShapeError(std::string("select_targets: layer ") + std::to_string(l) + " has " +
                       std::to_string(scores[l].size()) + " " + what + " scores for " + std::to_string(kept) +
                       " kept units");
    }
    for (double s : scores[l]) {
      if (!std::isfinite(s)) throw NumericError(std::string("select_targets: non-finite ") + what + " score");
    }
    std::sort(out[l].begin(), out[l].end(), drop_before);
  }
  return out;
}

void drop(std::vector<std::vector<bool>>& mask, const Candidate& c) { mask[c.layer][c.unit] = false; }

void select_even(std::vector<std::vector<bool>>& mask, const std::vector<std::vector<Candidate>>& cands,
                 const std::vector<std::size_t>& quotas) {
  for (std::size_t l = 0; l < cands.size(); ++l) {
    if (quotas[l] > cands[l].size()) {
      throw ConfigError("cannot drop " + std::to_string(quotas[l]) + " units from layer " + std::to_string(l) +
                        " which keeps " + std::to_string(cands[l].size()));
    }
    for (std::size_t i = 0; i < quotas[l]; ++i) drop(mask, cands[l][i]);
  }
}

void select_uneven(std::vector<std::vector<bool>>& mask, const std::vector<std::vector<Candidate>>& cands,
                   std::size_t quota) {
  std::vector<Candidate> all;
  for (const auto& layer : cands) all.insert(all.end(), layer.begin(), layer.end());
  if (quota > all.size()) {
    throw ConfigError("cannot drop " + std::to_string(quota) + " units out of " + std::to_string(all.size()));
  }
  std::sort(all.begin(), all.end(), drop_before);
  for (std::size_t i = 0; i < quota; ++i) drop(mask, all[i]);
}

// Uneven selection where every layer keeps a multiple of m units. Each layer
// keeps its best-scored units; the per-layer widths maximize the kept score
// mass for the requested total. Ties keep fewer units in lower layers.
void select_rounded(std::vector<std::vector<bool>>& mask, const std::vector<std::vector<Candidate>>& cands,
                    std::size_t quota, std::size_t m) {
  std::size_t total = 0;
  for (const auto& layer : cands) total += layer.size();
  if (quota > total) {
    throw ConfigError("cannot drop " + std::to_string(quota) + " units out of " + std::to_string(total));
  }
  const std::size_t keep = total - quota;
  if (keep % m != 0) {
    throw ConfigError("kept FFN width " + std::to_string(keep) + " is not a multiple of multiple_of=" +
                      std::to_string(m));
  }
  const std::size_t L = cands.size();
  const std::size_t T = keep / m;
  constexpr double kNone = -std::numeric_limits<double>::infinity();

  // prefix[l][k]: score mass of the k*m best units of layer l.
  std::vector<std::vector<double>> prefix(L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& c = cands[l];
    prefix[l].push_back(0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      acc += c[c.size() - 1 - i].score;
      if ((i + 1) % m == 0) prefix[l].push_back(acc);
    }
  }
  // best[l][t]: maximum mass of layers l.. keeping t*m units in total.
  std::vector<std::vector<double>> best(L + 1, std::vector<double>(T + 1, kNone));
  best[L][0] = 0.0;
  for (std::size_t l = L; l-- > 0;) {
    for (std::size_t t = 0; t <= T; ++t) {
      for (std::size_t k = 0; k < prefix[l].size() && k <= t; ++k) {
        if (best[l + 1][t - k] == kNone) continue;
        best[l][t] = std::max(best[l][t], prefix[l][k] + best[l + 1][t - k]);
      }
    }
  }
  if (L == 0 || best[0][T] == kNone) {
    throw ConfigError("no per-layer FFN widths that are multiples of " + std::to_string(m) + " keep " +
                      std::to_string(keep) + " neurons in total");
  }
  std::size_t t = T;
  for (std::size_t l = 0; l < L; ++l) {
    std::size_t chosen = 0;
    for (std::size_t k = 0; k < prefix[l].size() && k <= t; ++k) {
      if (best[l + 1][t - k] != kNone && prefix[l][k] + best[l + 1][t - k] == best[l][t]) {
        chosen = k;
        break;
      }
    }
    const std::size_t n_drop = cands[l].size() - chosen * m;
    for (std::size_t i = 0; i < n_drop; ++i) drop(mask, cands[l][i]);
    t -= chosen;
  }
}

struct Quotas {
  std::vector<std::size_t> per_layer;  // even mode
  std::size_t total = 0;               // uneven mode
};

void select_kind(std::vector<std::vector<bool>>& mask, const std::vector<std::vector<double>>& scores, bool even,
                 const Quotas& q, std::size_t multiple_of, const char* what) {
  const auto cands = layer_candidates(scores, mask, what);
  if (even) {
    select_even(mask, cands, q.per_layer);
  } else if (multiple_of > 1) {
    select_rounded(mask, cands, q.total, multiple_of);
  } else {
    select_uneven(mask, cands, q.total);
  }
}

Quotas even_split(std::size_t quota, std::size_t layers, const char* what) {
  if (layers == 0 || quota % layers != 0) {
    throw ConfigError(std::string("even ") + what + " masking needs a quota divisible by the layer count");
  }
  return {std::vector<std::size_t>(layers, quota / layers), quota};
}

std::vector<std::size_t> widths_heads(const ModelConfig& c) { return c.num_heads; }
std::vector<std::size_t> widths_ffn(const ModelConfig& c) { return c.ffn_size; }

json counts_json(const ParameterCounts& p) {
  return {{"embedding", p.embedding}, {"heads", p.heads_total},   {"ffn", p.ffn_total},  {"layer_norm", p.layer_norm},
          {"transformer", p.transformer}, {"task_head", p.task_head}, {"total", p.total}};
}

json pairs_json(const std::vector<std::pair<std::size_t, std::size_t>>& v) {
  json out = json::array();
  for (const auto& [l, u] : v) out.push_back({l, u});
  return out;
}

// Per-iteration schedule for one unit kind.
struct Schedule {
  bool even = true;
  std::vector<std::vector<std::size_t>> per_layer;  // [iteration][layer]
  std::vector<std::size_t> total;                   // [iteration]

  Quotas at(std::size_t k) const { return {even ? per_layer[k] : std::vector<std::size_t>{}, total[k]}; }
  bool any(std::size_t k) const { return total[k] > 0; }
};

Schedule make_schedule(const std::vector<std::size_t>& widths, std::size_t target, bool even, std::size_t n_iters,
                       const char* what) {
  Schedule s;
  s.even = even;
  s.total.assign(n_iters, 0);
  s.per_layer.assign(n_iters, std::vector<std::size_t>(widths.size(), 0));
  if (even) {
    for (std::size_t l = 0; l < widths.size(); ++l) {
      if (widths[l] < target) {
        throw ConfigError(std::string("target ") + what + " " + std::to_string(target) + " exceeds layer " +
                          std::to_string(l) + "'s current " + std::to_string(widths[l]));
      }
      const auto q = split_quota(widths[l] - target, n_iters);
      for (std::size_t k = 0; k < n_iters; ++k) {
        s.per_layer[k][l] = q[k];
        s.total[k] += q[k];
      }
    }
  } else {
    std::size_t current = 0;
    for (std::size_t w : widths) current += w;
    const std::size_t goal = target * widths.size();
    if (current < goal) {
      throw ConfigError(std::string("target ") + what + " " + std::to_string(target) +
                        " exceeds the current average width");
    }
    s.total = split_quota(current - goal, n_iters);
  }
  return s;
}

}  // namespace

PruningMask PruningMask::keep_all(const ModelConfig& config) {
  return {full_rows(widths_heads(config)), full_rows(widths_ffn(config))};
}

PruningMask PruningMask::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("mask: expected an object with \"heads\" and \"ffn\"");
  for (const auto& [key, _] : j.items()) {
    if (key != "heads" && key != "ffn") throw ValidationError("mask: unknown key '" + key + "'");
  }
  PruningMask m{rows_from_json(j, "heads"), rows_from_json(j, "ffn")};
  if (m.heads.size() != m.ffn.size()) throw ValidationError("mask: field 'ffn' covers a different layer count than 'heads'");
  return m;
}

PruningMask PruningMask::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read mask file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
  return from_json(j);
}

json PruningMask::to_json() const { return {{"heads", rows_to_json(heads)}, {"ffn", rows_to_json(ffn)}}; }

std::vector<std::size_t> PruningMask::kept_heads() const { return count_kept(heads); }
std::vector<std::size_t> PruningMask::kept_ffn() const { return count_kept(ffn); }

bool PruningMask::extends(const PruningMask& earlier) const {
  auto covers = [](const auto& now, const auto& before) {
    if (now.size() != before.size()) return false;
    for (std::size_t l = 0; l < now.size(); ++l) {
      if (now[l].size() != before[l].size()) return false;
      for (std::size_t u = 0; u < now[l].size(); ++u) {
        if (now[l][u] && !before[l][u]) return false;
      }
    }
    return true;
  };
  return covers(heads, earlier.heads) && covers(ffn, earlier.ffn);
}

std::vector<std::size_t> split_quota(std::size_t total, std::size_t n_iters) {
  if (n_iters == 0) throw ConfigError("n_iters must be at least 1");
  std::vector<std::size_t> out(n_iters, total / n_iters);
  for (std::size_t k = 0; k < total % n_iters; ++k) ++out[k];
  return out;
}

PruningMask select_targets(const ScoreTable& scores, const PruningMask& mask, std::size_t quota_heads,
                           std::size_t quota_ffn, const TransformerPruningConfig& config) {
  const std::size_t L = mask.heads.size();
  PruningMask out = mask;
  const Quotas qh = config.head_even_masking ? even_split(quota_heads, L, "head") : Quotas{{}, quota_heads};
  const Quotas qf = config.ffn_even_masking ? even_split(quota_ffn, L, "FFN") : Quotas{{}, quota_ffn};
  select_kind(out.heads, scores.head_scores, config.head_even_masking, qh, 1, "head");
  select_kind(out.ffn, scores.ffn_scores, config.ffn_even_masking, qf, config.multiple_of, "FFN");
  return out;
}

void apply_mask(Model& model, const PruningMask& current, const PruningMask& target) {
  const std::size_t L = model.config.num_layers;
  if (current.heads.size() != L || target.heads.size() != L || current.ffn.size() != L || target.ffn.size() != L) {
    throw ShapeError("apply_mask: mask layer count does not match the model");
  }
  if (current.kept_heads() != model.config.num_heads || current.kept_ffn() != model.config.ffn_size) {
    throw ShapeError("apply_mask: current mask does not match the model widths");
  }
  if (!target.extends(current)) throw ContractError("apply_mask: target mask re-enables pruned units");
  auto removed = [](const std::vector<bool>& cur, const std::vector<bool>& tgt) {
    std::vector<std::size_t> idx;
    std::size_t pos = 0;
    for (std::size_t u = 0; u < cur.size(); ++u) {
      if (!cur[u]) continue;
      if (!tgt[u]) idx.push_back(pos);
      ++pos;
    }
    return idx;
  };
  for (std::size_t l = 0; l < L; ++l) {
    const auto h = removed(current.heads[l], target.heads[l]);
    if (!h.empty()) remove_heads(model, l, h);
    const auto f = removed(current.ffn[l], target.ffn[l]);
    if (!f.empty()) remove_ffn_neurons(model, l, f);
  }
}

json PruneReport::to_json() const {
  json iters = json::array();
  for (const auto& it : iterations) {
    iters.push_back({{"iteration", it.iteration},
                     {"scored", it.scored},
                     {"pruned_heads", pairs_json(it.pruned_heads)},
                     {"pruned_ffn", pairs_json(it.pruned_ffn)},
                     {"heads_per_layer", it.heads_per_layer},
                     {"ffn_per_layer", it.ffn_per_layer},
                     {"seconds", it.seconds}});
  }
  json j = {{"mode", mode},
            {"initial_parameters", counts_json(initial_parameters)},
            {"final_parameters", counts_json(final_parameters)},
            {"initial_heads", initial_heads},
            {"initial_ffn", initial_ffn},
            {"final_heads", final_heads},
            {"final_ffn", final_ffn},
            {"iterations", iters},
            {"warnings", warnings},
            {"elapsed_seconds", elapsed_seconds}};
  if (initial_parameters.total > 0) {
    j["remaining_fraction"] =
        static_cast<double>(final_parameters.total) / static_cast<double>(initial_parameters.total);
  }
  if (vocabulary) {
    j["vocabulary"] = {{"initial_size", vocabulary->initial_size},
                       {"final_size", vocabulary->final_size},
                       {"min_count", vocabulary->min_count},
                       {"lm_head_pruned", vocabulary->lm_head_pruned}};
  }
  return j;
}

TransformerPruneResult transformer_prune(Model& model, const Dataset& data, const TransformerPruningConfig& config,
                                         const TransformerPruneOptions& options) {
  config.validate();
  const auto start = Clock::now();
  TransformerPruneResult result;
  PruneReport& report = result.report;
  report.mode = "transformer";
  report.initial_parameters = count_parameters(model);
  report.initial_heads = model.config.num_heads;
  report.initial_ffn = model.config.ffn_size;
  PruningMask mask = PruningMask::keep_all(model.config);

  auto finish = [&]() {
    report.final_parameters = count_parameters(model);
    report.final_heads = model.config.num_heads;
    report.final_ffn = model.config.ffn_size;
    report.elapsed_seconds = seconds_since(start);
    result.mask = mask;
    return result;
  };
  auto log_step = [&](std::size_t k, const PruningMask& next, bool scored, Clock::time_point t0) {
    IterationLog log;
    log.iteration = k;
    log.scored = scored;
    for (std::size_t l = 0; l < next.heads.size(); ++l) {
      for (std::size_t u = 0; u < next.heads[l].size(); ++u) {
        if (mask.heads[l][u] && !next.heads[l][u]) log.pruned_heads.emplace_back(l, u);
      }
      for (std::size_t u = 0; u < next.ffn[l].size(); ++u) {
        if (mask.ffn[l][u] && !next.ffn[l][u]) log.pruned_ffn.emplace_back(l, u);
      }
    }
    apply_mask(model, mask, next);
    mask = next;
    log.heads_per_layer = model.config.num_heads;
    log.ffn_per_layer = model.config.ffn_size;
    log.seconds = seconds_since(t0);
    report.iterations.push_back(log);
    if (options.progress) options.progress(report.iterations.back());
  };

  if (config.pruning_method == PruningMethod::Mask) {
    if (!options.mask) throw ConfigError("mask pruning needs a mask (--mask)");
    const PruningMask& user = *options.mask;
    if (user.heads.size() != mask.heads.size()) {
      throw ShapeError("mask covers " + std::to_string(user.heads.size()) + " layers, the model " +
                       std::to_string(mask.heads.size()));
    }
    for (std::size_t l = 0; l < mask.heads.size(); ++l) {
      if (user.heads[l].size() != mask.heads[l].size() || user.ffn[l].size() != mask.ffn[l].size()) {
        throw ShapeError("mask widths do not match layer " + std::to_string(l));
      }
    }
    log_step(0, user, false, Clock::now());
    return finish();
  }

  if (data.empty()) throw ContractError("transformer pruning needs a non-empty dataset");
  if (!config.use_logits && !data.labeled) {
    throw ContractError("supervised scoring needs a labeled dataset; set use_logits for unlabeled data");
  }
  const std::size_t n = config.n_iters;
  const Schedule heads = make_schedule(model.config.num_heads, *config.target_num_of_heads,
                                       config.head_even_masking, n, "head count");
  const Schedule ffn = make_schedule(model.config.ffn_size, *config.target_ffn_size, config.ffn_even_masking, n,
                                     "FFN width");
  const std::size_t m = config.ffn_even_masking ? 1 : config.multiple_of;
  if (m > 1 && (*config.target_ffn_size * model.config.num_layers) % m != 0) {
    throw ConfigError("target_ffn_size x num_layers must be a multiple of multiple_of");
  }
  std::size_t last_ffn_step = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (ffn.any(k)) last_ffn_step = k;
  }

  const LossSpec loss =
      config.use_logits ? LossSpec::self_supervised(model, data, options.adaptor) : LossSpec::supervised();
  const ScoringOptions scoring{config.score_granularity, options.adaptor};

  for (std::size_t k = 0; k < n; ++k) {
    const auto t0 = Clock::now();
    if (!heads.any(k) && !ffn.any(k)) {
      log_step(k, mask, false, t0);
      continue;
    }
    const ScoreTable scores = compute_scores(model, data, loss, scoring);
    if (options.on_scores) options.on_scores(k, scores);
    PruningMask next = mask;
    select_kind(next.heads, scores.head_scores, heads.even, heads.at(k), 1, "head");
    select_kind(next.ffn, scores.ffn_scores, ffn.even, ffn.at(k), k == last_ffn_step ? m : 1, "FFN");
    log_step(k, next, true, t0);
  }
  return finish();
}

VocabPruneResult vocabulary_prune(Model& model, const Vocabulary& vocab, const fs::path& corpus,
                                  const VocabularyPruningConfig& config, bool pretokenized) {
  const auto start = Clock::now();
  if (model.config.vocab_size != vocab.size()) {
    throw ContractError("model vocabulary size " + std::to_string(model.config.vocab_size) +
                        " differs from vocab.txt size " + std::to_string(vocab.size()));
  }
  if (static_cast<std::size_t>(model.config.pad_token_id) >= vocab.size() ||
      model.config.pad_token_id != vocab.pad_id()) {
    throw ContractError("model pad_token_id does not match the vocabulary's [PAD]");
  }
  PruneReport report;
  report.mode = "vocabulary";
  report.initial_parameters = count_parameters(model);
  report.initial_heads = report.final_heads = model.config.num_heads;
  report.initial_ffn = report.final_ffn = model.config.ffn_size;

  const auto counts = count_corpus_tokens(vocab, corpus, pretokenized);
  std::vector<std::int32_t> kept;
  std::size_t non_special = 0;
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    const auto i = static_cast<std::int32_t>(id);
    if (vocab.is_special(i)) {
      kept.push_back(i);
    } else if (counts[id] >= config.min_count) {
      kept.push_back(i);
      ++non_special;
    }
  }
  if (non_special == 0) {
    report.warnings.push_back("no token besides the special tokens reaches min_count=" +
                              std::to_string(config.min_count) + " in " + corpus.string());
  }
  auto [new_vocab, mapping] = reindex(vocab, kept);
  const VocabMapping model_mapping = remove_vocab_rows(model, kept, config.prune_lm_head);
  if (!(model_mapping == mapping)) throw ContractError("vocabulary and embedding mappings diverged");

  report.final_parameters = count_parameters(model);
  report.vocabulary = VocabularySummary{vocab.size(), new_vocab.size(), config.min_count,
                                        config.prune_lm_head && model.config.has_lm_head};
  report.elapsed_seconds = seconds_since(start);
  return {std::move(new_vocab), std::move(mapping), std::move(report)};
}

void save_outputs(const fs::path& directory, const Model& model, const Vocabulary& vocab, const json& report) {
  static std::atomic<unsigned> counter{0};
  const fs::path target = fs::absolute(directory).lexically_normal();
  const fs::path parent = target.parent_path();
  const std::string name = target.filename().string();
  const std::string tag = std::to_string(::getpid()) + "-" + std::to_string(counter++);
  const fs::path staging = parent / ("." + name + ".tmp-" + tag);
  const fs::path backup = parent / ("." + name + ".old-" + tag);
  std::error_code ec;
  try {
    fs::create_directories(parent);
    fs::create_directories(staging);
    save_model(model, staging);
    vocab.save(staging / "vocab.txt");
    std::ofstream out(staging / "prune_report.json");
    out << report.dump(2) << '\n';
    out.close();
    if (!out) throw IoError("cannot write " + (staging / "prune_report.json").string());
    const bool had_old = fs::exists(target);
    if (had_old) fs::rename(target, backup);
    try {
      fs::rename(staging, target);
    } catch (...) {
      if (had_old) fs::rename(backup, target, ec);
      throw;
    }
    if (had_old) fs::remove_all(backup, ec);
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(staging, ec);
    throw IoError(std::string("cannot write output directory: ") + e.what());
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
}

PipelineResult pipeline_prune(Model model, const Vocabulary& vocab, const fs::path& corpus, const Dataset& data,
                              const GeneralConfig& general, const VocabularyPruningConfig& vocab_config,
                              const TransformerPruningConfig& transformer_config,
                              const TransformerPruneOptions& options, bool pretokenized) {
  general.require_supported_device();
  const auto start = Clock::now();
  auto trm = transformer_prune(model, data, transformer_config, options);
  auto voc = vocabulary_prune(model, vocab, corpus, vocab_config, pretokenized);

  PruneReport report = std::move(trm.report);
  report.mode = "pipeline";
  report.final_parameters = voc.report.final_parameters;
  report.vocabulary = voc.report.vocabulary;
  report.warnings.insert(report.warnings.end(), voc.report.warnings.begin(), voc.report.warnings.end());
  report.elapsed_seconds = seconds_since(start);
  save_outputs(general.output_dir, model, voc.vocab, report.to_json());
  return {std::move(model), std::move(voc.vocab), std::move(report)};
}

}  // namespace sprune
