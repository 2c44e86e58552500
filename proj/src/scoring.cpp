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

#include "sprune/scoring.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <limits>

#include "sprune/errors.hpp"
#include "sprune/ops.hpp"

namespace sprune {
namespace {

// Row-wise log-softmax of a [rows × cols] buffer.
std::vector<double> log_softmax(std::span<const double> x, std::size_t rows, std::size_t cols) {
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* r = x.data() + i * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j) mx = std::max(mx, r[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += std::exp(r[j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = r[j] - lse;
  }
  return out;
}

void require_matrix(const Tensor& t, const char* what) {
  if (!t.defined() || t.rank() != 2 || t.dim(0) == 0 || t.dim(1) == 0) {
    throw ShapeError(std::string(what) + ": expected a non-empty [rows x classes] tensor");
  }
}

Tensor slice_reference(const Tensor& ref, std::size_t batch, std::size_t row_begin, std::size_t row_count) {
  if (row_begin == 0 && row_count == batch) return ref;
  const std::size_t per_row = ref.dim(0) / batch;
  return ops::slice_rows(ref, row_begin * per_row, row_count * per_row);
}

}  // namespace

const char* loss_kind_name(LossKind kind) {
  return kind == LossKind::SelfSupervisedKl ? "self_supervised_kl" : "supervised_cross_entropy";
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels) {
  require_matrix(logits, "cross_entropy");
  const std::size_t b = logits.dim(0), c = logits.dim(1);
  if (labels.size() != b) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(b) + " rows");
  }
  for (std::int32_t y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw ContractError("cross_entropy: label " + std::to_string(y) + " out of range for " + std::to_string(c) +
                          " classes");
    }
  }
  const auto logp = log_softmax(logits.data(), b, c);
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) loss -= logp[i * c + static_cast<std::size_t>(labels[i])];
  loss /= static_cast<double>(b);

  const bool track = logits.requires_grad() && Tape::active() != nullptr;
  Tensor out({1}, {loss}, track);
  if (track) {
    Tape::active()->record(out, [logits, logp, lab = std::vector<std::int32_t>(labels.begin(), labels.end()), b,
                                 c](std::span<const double> g) {
      std::vector<double> d(b * c);
      const double scale = g[0] / static_cast<double>(b);
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < c; ++j) d[i * c + j] = std::exp(logp[i * c + j]) * scale;
        d[i * c + static_cast<std::size_t>(lab[i])] -= scale;
      }
      accumulate_grad(logits, d);
    });
  }
  return out;
}

Tensor kl_loss(const Tensor& q_logits, const Tensor& p_logits) {
  require_matrix(q_logits, "kl_loss");
  require_matrix(p_logits, "kl_loss");
  if (q_logits.shape() != p_logits.shape()) {
    throw ShapeError("kl_loss: shapes " + shape_string(q_logits.shape()) + " and " +
                     shape_string(p_logits.shape()) + " differ");
  }
  const std::size_t b = p_logits.dim(0), c = p_logits.dim(1);
  const auto logq = log_softmax(q_logits.data(), b, c);
  const auto logp = log_softmax(p_logits.data(), b, c);
  double loss = 0.0;
  for (std::size_t i = 0; i < b * c; ++i) loss += std::exp(logq[i]) * (logq[i] - logp[i]);
  loss /= static_cast<double>(b);

  const bool track = p_logits.requires_grad() && Tape::active() != nullptr;
  Tensor out({1}, {loss}, track);
  if (track) {
    Tape::active()->record(out, [p_logits, logq, logp, b, c](std::span<const double> g) {
      std::vector<double> d(b * c);
      const double scale = g[0] / static_cast<double>(b);
      for (std::size_t i = 0; i < b * c; ++i) d[i] = (std::exp(logp[i]) - std::exp(logq[i])) * scale;
      accumulate_grad(p_logits, d);
    });
  }
  return out;
}

LossSpec LossSpec::self_supervised(const Model& model, const Dataset& data, const Adaptor& adaptor) {
  LossSpec spec;
  spec.kind = LossKind::SelfSupervisedKl;
  const Model frozen = model.detached();
  spec.reference_logits.reserve(data.batches.size());
  for (const auto& b : data.batches) spec.reference_logits.push_back(adaptor.logits(frozen, b.tokens));
  return spec;
}

nlohmann::json ScoreTable::to_json() const {
  return {{"loss_kind", loss_kind_name(loss_kind)},
          {"num_examples_seen", num_examples_seen},
          {"head_scores", head_scores},
          {"ffn_scores", ffn_scores}};
}

void write_scores_json(const ScoreTable& scores, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << scores.to_json().dump(2) << '\n';
}

Tensor batch_loss(const Model& model, const Dataset& data, std::size_t batch_index, const LossSpec& loss,
                  const ScoringOptions& options, const Gates* gates, std::size_t row_begin, std::size_t row_count) {
  if (batch_index >= data.batches.size()) throw IndexError("batch index out of range");
  const Batch& batch = data.batches[batch_index];
  if (row_count == static_cast<std::size_t>(-1)) row_count = batch.tokens.batch - row_begin;
  const TokenBatch tokens =
      (row_begin == 0 && row_count == batch.tokens.batch) ? batch.tokens : batch.tokens.rows(row_begin, row_count);
  Tensor logits = options.adaptor.logits(model, tokens, gates);
  if (loss.kind == LossKind::SelfSupervisedKl) {
    if (batch_index >= loss.reference_logits.size()) {
      throw ContractError("self-supervised scoring: no cached reference logits for batch " +
                          std::to_string(batch_index));
    }
    Tensor ref = slice_reference(loss.reference_logits[batch_index], batch.tokens.batch, row_begin, row_count);
    return kl_loss(ref, logits);
  }
  if (options.adaptor.source != Adaptor::Source::TaskLogits) {
    throw ContractError("supervised scoring needs the task_logits adaptor");
  }
  if (batch.labels.size() != batch.tokens.batch) {
    throw ContractError("supervised scoring needs a labeled dataset");
  }
  return cross_entropy(logits, std::span(batch.labels).subspan(row_begin, row_count));
}

ScoreTable compute_scores(const Model& model, const Dataset& data, const LossSpec& loss,
                          const ScoringOptions& options) {
  if (data.empty()) throw ContractError("compute_scores: the dataset is empty");
  if (loss.kind == LossKind::SelfSupervisedKl && loss.reference_logits.size() != data.batches.size()) {
    throw ContractError("compute_scores: reference logits cover " + std::to_string(loss.reference_logits.size()) +
                        " batches, dataset has " + std::to_string(data.batches.size()));
  }
  if (loss.kind == LossKind::SupervisedCrossEntropy && !data.labeled) {
    throw ContractError("compute_scores: supervised scoring needs a labeled dataset");
  }

  const Model frozen = model.detached();
  const auto& cfg = frozen.config;
  const std::size_t num_batches = data.batches.size();

  struct Partial {
    std::vector<std::vector<double>> heads, ffn;
  };
  auto zero_partial = [&] {
    Partial p;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
      p.heads.emplace_back(cfg.num_heads[l], 0.0);
      p.ffn.emplace_back(cfg.ffn_size[l], 0.0);
    }
    return p;
  };

  // Sum of |dL/dg| over one loss evaluation, added into `into`.
  auto score_unit = [&](std::size_t batch_index, std::size_t row_begin, std::size_t row_count, Partial& into) {
    Tape tape;
    Tape::Recording recording(tape);
    Gates gates = Gates::ones(cfg, true);
    Tensor value = batch_loss(frozen, data, batch_index, loss, options, &gates, row_begin, row_count);
    if (!std::isfinite(value.item())) {
      throw NumericError("non-finite loss in batch " + std::to_string(batch_index));
    }
    if (!value.requires_grad()) return;  // no gated unit is reachable
    backward(tape, value);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
      auto gh = gates.heads[l].grad();
      for (std::size_t i = 0; i < gh.size(); ++i) into.heads[l][i] += std::fabs(gh[i]);
      auto gf = gates.ffn[l].grad();
      for (std::size_t i = 0; i < gf.size(); ++i) into.ffn[l][i] += std::fabs(gf[i]);
    }
  };

  std::vector<Partial> partials(num_batches);
  std::vector<std::exception_ptr> errors(num_batches);
#pragma omp parallel for schedule(static) if (num_batches > 1)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(num_batches); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    try {
      partials[b] = zero_partial();
      const std::size_t rows = data.batches[b].tokens.batch;
      if (options.granularity == ScoreGranularity::Batch) {
        score_unit(b, 0, rows, partials[b]);
      } else {
        for (std::size_t r = 0; r < rows; ++r) score_unit(b, r, 1, partials[b]);
      }
    } catch (...) {
      errors[b] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Partial total = zero_partial();
  for (const auto& p : partials) {
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
      for (std::size_t i = 0; i < p.heads[l].size(); ++i) total.heads[l][i] += p.heads[l][i];
      for (std::size_t i = 0; i < p.ffn[l].size(); ++i) total.ffn[l][i] += p.ffn[l][i];
    }
  }
  const std::size_t examples = data.num_examples();
  const double denom =
      static_cast<double>(options.granularity == ScoreGranularity::Batch ? num_batches : examples);
  ScoreTable table;
  table.loss_kind = loss.kind;
  table.num_examples_seen = examples;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    for (auto& v : total.heads[l]) v /= denom;
    for (auto& v : total.ffn[l]) v /= denom;
    table.head_scores.push_back(std::move(total.heads[l]));
    table.ffn_scores.push_back(std::move(total.ffn[l]));
  }
  return table;
}

}  // namespace sprune
