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

#include "sprune/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sprune/errors.hpp"
#include "sprune/ops.hpp"
#include "sprune/random.hpp"

namespace sprune {

constexpr double kLayerNormEps = 1e-5;

// ---------------------------------------------------------------- mapping

VocabMapping VocabMapping::from_kept(std::size_t old_size, std::span<const std::int32_t> kept_ids) {
  VocabMapping m;
  m.old_to_new.assign(old_size, kRemoved);
  m.new_to_old.reserve(kept_ids.size());
  for (std::int32_t id : kept_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= old_size) {
      throw IndexError("kept id " + std::to_string(id) + " out of range for vocabulary of " +
                       std::to_string(old_size));
    }
    if (m.old_to_new[static_cast<std::size_t>(id)] != kRemoved) {
      throw IndexError("kept id " + std::to_string(id) + " listed twice");
    }
    m.old_to_new[static_cast<std::size_t>(id)] = static_cast<std::int64_t>(m.new_to_old.size());
    m.new_to_old.push_back(id);
  }
  return m;
}

bool VocabMapping::kept(std::int32_t old_id) const {
  return old_id >= 0 && static_cast<std::size_t>(old_id) < old_to_new.size() &&
         old_to_new[static_cast<std::size_t>(old_id)] != kRemoved;
}

std::int32_t VocabMapping::map(std::int32_t old_id) const {
  if (!kept(old_id)) throw ContractError("token id " + std::to_string(old_id) + " was removed");
  return static_cast<std::int32_t>(old_to_new[static_cast<std::size_t>(old_id)]);
}

std::vector<std::int32_t> VocabMapping::map(std::span<const std::int32_t> old_ids) const {
  std::vector<std::int32_t> out;
  out.reserve(old_ids.size());
  for (std::int32_t id : old_ids) out.push_back(map(id));
  return out;
}

bool VocabMapping::is_identity() const {
  if (new_to_old.size() != old_to_new.size()) return false;
  for (std::size_t i = 0; i < new_to_old.size(); ++i) {
    if (new_to_old[i] != static_cast<std::int32_t>(i)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- config

ModelConfig ModelConfig::uniform(std::size_t layers, std::size_t hidden, std::size_t heads, std::size_t ffn,
                                 std::size_t vocab, std::size_t max_seq_len, std::size_t labels, bool has_lm_head,
                                 bool lm_head_tied) {
  if (heads == 0 || hidden % heads != 0) {
    throw ValidationError("hidden_size " + std::to_string(hidden) + " is not divisible by the head count " +
                          std::to_string(heads));
  }
  ModelConfig c;
  c.num_layers = layers;
  c.hidden_size = hidden;
  c.head_size = hidden / heads;
  c.num_heads.assign(layers, heads);
  c.ffn_size.assign(layers, ffn);
  c.vocab_size = vocab;
  c.max_seq_len = max_seq_len;
  c.num_labels = labels;
  c.has_lm_head = has_lm_head;
  c.lm_head_tied = lm_head_tied;
  c.lm_head_size = has_lm_head ? vocab : 0;
  c.validate();
  return c;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("model config: " + msg); };
  if (num_layers == 0) fail("num_layers must be positive");
  if (hidden_size == 0) fail("hidden_size must be positive");
  if (head_size == 0 || hidden_size % head_size != 0) fail("head_size must divide hidden_size");
  if (num_heads.size() != num_layers) fail("num_heads needs one entry per layer");
  if (ffn_size.size() != num_layers) fail("ffn_size needs one entry per layer");
  for (std::size_t h : num_heads) {
    if (h * head_size > hidden_size) fail("a layer has more heads than hidden_size / head_size");
  }
  if (vocab_size == 0) fail("vocab_size must be positive");
  if (max_seq_len == 0) fail("max_seq_len must be positive");
  if (num_labels == 0) fail("num_labels must be positive");
  if (has_lm_head && lm_head_tied && lm_head_size != vocab_size) fail("a tied LM head must span the vocabulary");
  if (has_lm_head && lm_head_size == 0) fail("lm_head_size must be positive");
  if (pad_token_id < 0 || static_cast<std::size_t>(pad_token_id) >= vocab_size) fail("pad_token_id out of range");
}

std::size_t ModelConfig::total_heads() const {
  std::size_t s = 0;
  for (auto h : num_heads) s += h;
  return s;
}

std::size_t ModelConfig::total_ffn() const {
  std::size_t s = 0;
  for (auto f : ffn_size) s += f;
  return s;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"num_layers", c.num_layers},     {"hidden_size", c.hidden_size},
                     {"head_size", c.head_size},       {"num_heads", c.num_heads},
                     {"ffn_size", c.ffn_size},         {"vocab_size", c.vocab_size},
                     {"max_seq_len", c.max_seq_len},   {"num_labels", c.num_labels},
                     {"has_lm_head", c.has_lm_head},   {"lm_head_tied", c.lm_head_tied},
                     {"lm_head_size", c.lm_head_size}, {"pad_token_id", c.pad_token_id}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("num_layers").get_to(c.num_layers);
  j.at("hidden_size").get_to(c.hidden_size);
  j.at("head_size").get_to(c.head_size);
  j.at("num_heads").get_to(c.num_heads);
  j.at("ffn_size").get_to(c.ffn_size);
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("max_seq_len").get_to(c.max_seq_len);
  j.at("num_labels").get_to(c.num_labels);
  j.at("has_lm_head").get_to(c.has_lm_head);
  j.at("lm_head_tied").get_to(c.lm_head_tied);
  j.at("lm_head_size").get_to(c.lm_head_size);
  j.at("pad_token_id").get_to(c.pad_token_id);
}

// ---------------------------------------------------------------- model

std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& c) {
  const std::size_t d = c.hidden_size, dh = c.head_size;
  std::vector<std::pair<std::string, Shape>> out;
  out.emplace_back("embeddings.word", Shape{c.vocab_size, d});
  out.emplace_back("embeddings.position", Shape{c.max_seq_len, d});
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    for (std::size_t h = 0; h < c.num_heads[l]; ++h) {
      const std::string hp = p + "heads." + std::to_string(h) + ".";
      out.emplace_back(hp + "query.weight", Shape{dh, d});
      out.emplace_back(hp + "query.bias", Shape{dh});
      out.emplace_back(hp + "key.weight", Shape{dh, d});
      out.emplace_back(hp + "key.bias", Shape{dh});
      out.emplace_back(hp + "value.weight", Shape{dh, d});
      out.emplace_back(hp + "value.bias", Shape{dh});
      out.emplace_back(hp + "output.weight", Shape{dh, d});
      out.emplace_back(hp + "output.bias", Shape{d});
    }
    out.emplace_back(p + "ffn.in.weight", Shape{d, c.ffn_size[l]});
    out.emplace_back(p + "ffn.in.bias", Shape{c.ffn_size[l]});
    out.emplace_back(p + "ffn.out.weight", Shape{c.ffn_size[l], d});
    out.emplace_back(p + "ffn.out.bias", Shape{d});
    out.emplace_back(p + "attention_norm.gain", Shape{d});
    out.emplace_back(p + "attention_norm.bias", Shape{d});
    out.emplace_back(p + "ffn_norm.gain", Shape{d});
    out.emplace_back(p + "ffn_norm.bias", Shape{d});
  }
  out.emplace_back("classifier.weight", Shape{d, c.num_labels});
  out.emplace_back("classifier.bias", Shape{c.num_labels});
  if (c.has_lm_head && !c.lm_head_tied) out.emplace_back("lm_head.weight", Shape{d, c.lm_head_size});
  return out;
}

namespace {

// Visits parameters in parameter_shapes() order.
template <typename ModelT, typename Fn>
void visit_parameters(ModelT& m, Fn&& fn) {
  fn("embeddings.word", m.word_embedding);
  fn("embeddings.position", m.position_embedding);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto& layer = m.layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    for (std::size_t h = 0; h < layer.heads.size(); ++h) {
      auto& head = layer.heads[h];
      const std::string hp = p + "heads." + std::to_string(h) + ".";
      fn(hp + "query.weight", head.query_weight);
      fn(hp + "query.bias", head.query_bias);
      fn(hp + "key.weight", head.key_weight);
      fn(hp + "key.bias", head.key_bias);
      fn(hp + "value.weight", head.value_weight);
      fn(hp + "value.bias", head.value_bias);
      fn(hp + "output.weight", head.output_weight);
      fn(hp + "output.bias", head.output_bias);
    }
    fn(p + "ffn.in.weight", layer.ffn_in_weight);
    fn(p + "ffn.in.bias", layer.ffn_in_bias);
    fn(p + "ffn.out.weight", layer.ffn_out_weight);
    fn(p + "ffn.out.bias", layer.ffn_out_bias);
    fn(p + "attention_norm.gain", layer.attention_norm_gain);
    fn(p + "attention_norm.bias", layer.attention_norm_bias);
    fn(p + "ffn_norm.gain", layer.ffn_norm_gain);
    fn(p + "ffn_norm.bias", layer.ffn_norm_bias);
  }
  fn("classifier.weight", m.classifier_weight);
  fn("classifier.bias", m.classifier_bias);
  if (m.lm_head_weight.defined()) fn("lm_head.weight", m.lm_head_weight);
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> Model::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  visit_parameters(*this, [&](std::string name, const Tensor& t) { out.emplace_back(std::move(name), t); });
  return out;
}

void Model::set_requires_grad(bool requires_grad) {
  visit_parameters(*this, [&](const std::string&, Tensor& t) { t = t.detach(requires_grad); });
}

void Model::zero_grad() {
  visit_parameters(*this, [](const std::string&, Tensor& t) { t.zero_grad(); });
}

Model Model::detached() const {
  Model copy = *this;
  copy.set_requires_grad(false);
  return copy;
}

void Model::validate() const {
  config.validate();
  if (layers.size() != config.num_layers) throw CorruptionError("model has " + std::to_string(layers.size()) +
                                                                " layers, config says " +
                                                                std::to_string(config.num_layers));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].heads.size() != config.num_heads[l]) {
      throw CorruptionError("layer " + std::to_string(l) + " stores " + std::to_string(layers[l].heads.size()) +
                            " heads, config says " + std::to_string(config.num_heads[l]));
    }
  }
  if (config.has_lm_head && !config.lm_head_tied && !lm_head_weight.defined()) {
    throw CorruptionError("untied LM head is missing");
  }
  const auto expected = parameter_shapes(config);
  const auto actual = named_parameters();
  if (expected.size() != actual.size()) throw CorruptionError("parameter count does not match the config");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].first != actual[i].first || expected[i].second != actual[i].second.shape()) {
      throw CorruptionError("tensor " + actual[i].first + " has shape " + shape_string(actual[i].second.shape()) +
                            ", expected " + expected[i].first + " " + shape_string(expected[i].second));
    }
  }
}

TokenBatch TokenBatch::rows(std::size_t begin, std::size_t count) const {
  if (begin + count > batch) throw IndexError("token batch row range out of bounds");
  TokenBatch out;
  out.batch = count;
  out.seq_len = seq_len;
  out.ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(begin * seq_len),
                 ids.begin() + static_cast<std::ptrdiff_t>((begin + count) * seq_len));
  return out;
}

Gates Gates::ones(const ModelConfig& config, bool requires_grad) {
  Gates g;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    g.heads.push_back(Tensor::full({config.num_heads[l]}, 1.0, requires_grad));
    g.ffn.push_back(Tensor::full({config.ffn_size[l]}, 1.0, requires_grad));
  }
  return g;
}

// ---------------------------------------------------------------- forward

namespace {

void check_gates(const Model& model, const Gates& gates) {
  const auto& c = model.config;
  if (gates.heads.size() != c.num_layers || gates.ffn.size() != c.num_layers) {
    throw ShapeError("gates need one head vector and one FFN vector per layer");
  }
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    if (gates.heads[l].numel() != c.num_heads[l]) {
      throw ShapeError("layer " + std::to_string(l) + " head gates have length " +
                       std::to_string(gates.heads[l].numel()) + ", layer has " + std::to_string(c.num_heads[l]) +
                       " heads");
    }
    if (gates.ffn[l].numel() != c.ffn_size[l]) {
      throw ShapeError("layer " + std::to_string(l) + " FFN gates have length " +
                       std::to_string(gates.ffn[l].numel()) + ", layer has " + std::to_string(c.ffn_size[l]) +
                       " neurons");
    }
  }
}

void check_batch(const Model& model, const TokenBatch& tokens) {
  if (tokens.ids.size() != tokens.batch * tokens.seq_len) {
    throw ShapeError("token batch holds " + std::to_string(tokens.ids.size()) + " ids, expected " +
                     std::to_string(tokens.batch) + "x" + std::to_string(tokens.seq_len));
  }
  if (tokens.batch == 0 || tokens.seq_len == 0) throw ShapeError("empty token batch");
  if (tokens.seq_len > model.config.max_seq_len) {
    throw ShapeError("sequence length " + std::to_string(tokens.seq_len) + " exceeds max_seq_len " +
                     std::to_string(model.config.max_seq_len));
  }
}

}  // namespace

Tensor encode_sequence(const Model& model, std::span<const std::int32_t> ids, const Gates* gates) {
  const auto& c = model.config;
  const std::size_t n = ids.size();
  if (n == 0) throw ShapeError("empty sequence");
  if (n > c.max_seq_len) {
    throw ShapeError("sequence length " + std::to_string(n) + " exceeds max_seq_len " + std::to_string(c.max_seq_len));
  }
  std::vector<std::uint8_t> key_keep(n);
  bool any_kept = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= c.vocab_size) {
      throw VocabularyError("token id " + std::to_string(ids[i]) + " is outside the vocabulary of " +
                            std::to_string(c.vocab_size));
    }
    key_keep[i] = ids[i] != c.pad_token_id;
    any_kept = any_kept || key_keep[i];
  }
  // An all-padding sequence attends everywhere rather than nowhere.
  if (!any_kept) key_keep.clear();
  if (gates) check_gates(model, *gates);

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(c.hidden_size));
  Tensor x = ops::add(ops::gather_rows(model.word_embedding, ids), ops::slice_rows(model.position_embedding, 0, n));
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    Tensor attention;
    for (std::size_t h = 0; h < layer.heads.size(); ++h) {
      const auto& head = layer.heads[h];
      Tensor q = ops::add_row(ops::matmul_nt(x, head.query_weight), head.query_bias);
      Tensor k = ops::add_row(ops::matmul_nt(x, head.key_weight), head.key_bias);
      Tensor v = ops::add_row(ops::matmul_nt(x, head.value_weight), head.value_bias);
      Tensor probs = ops::softmax_rows(ops::scale(ops::matmul_nt(q, k), inv_sqrt_d), key_keep);
      Tensor out = ops::add_row(ops::matmul(ops::matmul(probs, v), head.output_weight), head.output_bias);
      if (gates) out = ops::scale_by(out, gates->heads[l], h);
      attention = attention.defined() ? ops::add(attention, out) : out;
    }
    x = ops::layer_norm(attention.defined() ? ops::add(x, attention) : x, layer.attention_norm_gain,
                        layer.attention_norm_bias, kLayerNormEps);

    Tensor act = ops::gelu(ops::add_row(ops::matmul(x, layer.ffn_in_weight), layer.ffn_in_bias));
    if (gates) act = ops::mul_cols(act, gates->ffn[l]);
    Tensor ffn = ops::add_row(ops::matmul(act, layer.ffn_out_weight), layer.ffn_out_bias);
    x = ops::layer_norm(ops::add(x, ffn), layer.ffn_norm_gain, layer.ffn_norm_bias, kLayerNormEps);
  }
  return x;
}

Tensor encoder_forward(const Model& model, const TokenBatch& tokens, const Gates* gates) {
  check_batch(model, tokens);
  std::vector<Tensor> states;
  states.reserve(tokens.batch);
  for (std::size_t b = 0; b < tokens.batch; ++b) states.push_back(encode_sequence(model, tokens.row(b), gates));
  return ops::stack(states);
}

Tensor task_forward(const Model& model, const TokenBatch& tokens, const Gates* gates) {
  check_batch(model, tokens);
  std::vector<Tensor> cls;
  cls.reserve(tokens.batch);
  for (std::size_t b = 0; b < tokens.batch; ++b) {
    cls.push_back(ops::slice_rows(encode_sequence(model, tokens.row(b), gates), 0, 1));
  }
  return ops::add_row(ops::matmul(ops::concat_rows(cls), model.classifier_weight), model.classifier_bias);
}

Tensor lm_forward(const Model& model, const TokenBatch& tokens, const Gates* gates) {
  if (!model.config.has_lm_head) throw ContractError("model has no LM head");
  check_batch(model, tokens);
  std::vector<Tensor> logits;
  logits.reserve(tokens.batch);
  for (std::size_t b = 0; b < tokens.batch; ++b) {
    Tensor h = encode_sequence(model, tokens.row(b), gates);
    logits.push_back(model.config.lm_head_tied ? ops::matmul_nt(h, model.word_embedding)
                                               : ops::matmul(h, model.lm_head_weight));
  }
  return ops::concat_rows(logits);
}

// ---------------------------------------------------------------- surgery

namespace {

std::vector<std::uint8_t> removal_flags(std::size_t width, std::span<const std::size_t> indices, const char* what) {
  std::vector<std::uint8_t> drop(width, 0);
  for (std::size_t i : indices) {
    if (i >= width) {
      throw IndexError(std::string(what) + " index " + std::to_string(i) + " out of range for width " +
                       std::to_string(width));
    }
    if (drop[i]) throw IndexError(std::string(what) + " index " + std::to_string(i) + " listed twice");
    drop[i] = 1;
  }
  return drop;
}

void check_layer(const Model& model, std::size_t layer) {
  if (layer >= model.layers.size()) {
    throw IndexError("layer " + std::to_string(layer) + " out of range for " + std::to_string(model.layers.size()) +
                     " layers");
  }
}

}  // namespace

void remove_heads(Model& model, std::size_t layer, std::span<const std::size_t> head_indices) {
  check_layer(model, layer);
  auto& heads = model.layers[layer].heads;
  const auto drop = removal_flags(heads.size(), head_indices, "head");
  if (head_indices.empty()) return;
  std::vector<AttentionHead> kept;
  kept.reserve(heads.size() - head_indices.size());
  for (std::size_t h = 0; h < heads.size(); ++h) {
    if (!drop[h]) kept.push_back(std::move(heads[h]));
  }
  heads = std::move(kept);
  model.config.num_heads[layer] = heads.size();
}

void remove_ffn_neurons(Model& model, std::size_t layer, std::span<const std::size_t> neuron_indices) {
  check_layer(model, layer);
  auto& L = model.layers[layer];
  const std::size_t width = L.ffn_size();
  const std::size_t d = model.config.hidden_size;
  const auto drop = removal_flags(width, neuron_indices, "FFN neuron");
  if (neuron_indices.empty()) return;
  const std::size_t kept = width - neuron_indices.size();

  std::vector<double> w1, b1, w2;
  w1.reserve(d * kept);
  b1.reserve(kept);
  w2.reserve(kept * d);
  auto w1d = L.ffn_in_weight.data(), b1d = L.ffn_in_bias.data(), w2d = L.ffn_out_weight.data();
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t j = 0; j < width; ++j)
      if (!drop[j]) w1.push_back(w1d[r * width + j]);
  for (std::size_t j = 0; j < width; ++j) {
    if (drop[j]) continue;
    b1.push_back(b1d[j]);
    w2.insert(w2.end(), w2d.begin() + static_cast<std::ptrdiff_t>(j * d),
              w2d.begin() + static_cast<std::ptrdiff_t>((j + 1) * d));
  }
  L.ffn_in_weight = Tensor({d, kept}, std::move(w1), L.ffn_in_weight.requires_grad());
  L.ffn_in_bias = Tensor({kept}, std::move(b1), L.ffn_in_bias.requires_grad());
  L.ffn_out_weight = Tensor({kept, d}, std::move(w2), L.ffn_out_weight.requires_grad());
  model.config.ffn_size[layer] = kept;
}

VocabMapping remove_vocab_rows(Model& model, std::span<const std::int32_t> kept_ids, bool prune_lm_head) {
  if (kept_ids.empty()) throw ContractError("remove_vocab_rows: kept_ids is empty");
  auto& c = model.config;
  VocabMapping mapping = VocabMapping::from_kept(c.vocab_size, kept_ids);
  if (!mapping.kept(c.pad_token_id)) throw ContractError("remove_vocab_rows: the pad token must be kept");

  const std::size_t d = c.hidden_size;
  const std::size_t kept = kept_ids.size();
  auto emb = model.word_embedding.data();

  if (c.has_lm_head) {
    if (c.lm_head_tied && !prune_lm_head) {
      // Materialize Eᵀ so the head keeps scoring the old vocabulary.
      std::vector<double> head(d * c.vocab_size);
      for (std::size_t v = 0; v < c.vocab_size; ++v)
        for (std::size_t j = 0; j < d; ++j) head[j * c.vocab_size + v] = emb[v * d + j];
      model.lm_head_weight = Tensor({d, c.vocab_size}, std::move(head));
      c.lm_head_tied = false;
      c.lm_head_size = c.vocab_size;
    } else if (!c.lm_head_tied && prune_lm_head) {
      if (c.lm_head_size != c.vocab_size) {
        throw ContractError("remove_vocab_rows: untied LM head no longer spans the embedding vocabulary");
      }
      auto w = model.lm_head_weight.data();
      std::vector<double> head(d * kept);
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t v = 0; v < kept; ++v)
          head[j * kept + v] = w[j * c.lm_head_size + static_cast<std::size_t>(kept_ids[v])];
      model.lm_head_weight = Tensor({d, kept}, std::move(head), model.lm_head_weight.requires_grad());
      c.lm_head_size = kept;
    }
  }

  std::vector<double> rows(kept * d);
  for (std::size_t v = 0; v < kept; ++v) {
    std::copy_n(emb.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(kept_ids[v]) * d), d,
                rows.begin() + static_cast<std::ptrdiff_t>(v * d));
  }
  model.word_embedding = Tensor({kept, d}, std::move(rows), model.word_embedding.requires_grad());
  c.vocab_size = kept;
  if (c.has_lm_head && c.lm_head_tied) c.lm_head_size = kept;
  c.pad_token_id = mapping.map(c.pad_token_id);
  return mapping;
}

// ---------------------------------------------------------------- counting

ParameterCounts count_parameters(const ModelConfig& c) {
  const std::size_t d = c.hidden_size, dh = c.head_size;
  const std::size_t per_head = 4 * dh * d + 3 * dh + d;
  ParameterCounts p;
  p.embedding = c.vocab_size * d + c.max_seq_len * d;
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    p.heads_total += c.num_heads[l] * per_head;
    p.ffn_total += 2 * d * c.ffn_size[l] + c.ffn_size[l] + d;
    p.layer_norm += 4 * d;
  }
  p.transformer = p.heads_total + p.ffn_total + p.layer_norm;
  p.task_head = d * c.num_labels + c.num_labels;
  if (c.has_lm_head && !c.lm_head_tied) p.task_head += d * c.lm_head_size;
  p.total = p.embedding + p.transformer + p.task_head;
  return p;
}

ParameterCounts count_parameters(const Model& model) {
  ParameterCounts p;
  p.embedding = model.word_embedding.numel() + model.position_embedding.numel();
  for (const auto& layer : model.layers) {
    for (const auto& h : layer.heads) {
      p.heads_total += h.query_weight.numel() + h.query_bias.numel() + h.key_weight.numel() + h.key_bias.numel() +
                       h.value_weight.numel() + h.value_bias.numel() + h.output_weight.numel() +
                       h.output_bias.numel();
    }
    p.ffn_total += layer.ffn_in_weight.numel() + layer.ffn_in_bias.numel() + layer.ffn_out_weight.numel() +
                   layer.ffn_out_bias.numel();
    p.layer_norm += layer.attention_norm_gain.numel() + layer.attention_norm_bias.numel() +
                    layer.ffn_norm_gain.numel() + layer.ffn_norm_bias.numel();
  }
  p.transformer = p.heads_total + p.ffn_total + p.layer_norm;
  p.task_head = model.classifier_weight.numel() + model.classifier_bias.numel() + model.lm_head_weight.numel();
  p.total = p.embedding + p.transformer + p.task_head;
  return p;
}

// ---------------------------------------------------------------- init

Model random_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const std::size_t d = config.hidden_size, dh = config.head_size;
  auto normal = [&](Shape shape, double stddev, double mean = 0.0) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = mean + stddev * rng.normal();
    return Tensor(std::move(shape), std::move(v));
  };
  const double w_std = 1.0 / std::sqrt(static_cast<double>(d));

  Model m;
  m.config = config;
  m.word_embedding = normal({config.vocab_size, d}, 1.0);
  m.position_embedding = normal({config.max_seq_len, d}, 0.5);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    EncoderLayer layer;
    for (std::size_t h = 0; h < config.num_heads[l]; ++h) {
      AttentionHead head;
      head.query_weight = normal({dh, d}, w_std);
      head.query_bias = normal({dh}, 0.1);
      head.key_weight = normal({dh, d}, w_std);
      head.key_bias = normal({dh}, 0.1);
      head.value_weight = normal({dh, d}, w_std);
      head.value_bias = normal({dh}, 0.1);
      head.output_weight = normal({dh, d}, w_std);
      head.output_bias = normal({d}, 0.1);
      layer.heads.push_back(std::move(head));
    }
    const std::size_t f = config.ffn_size[l];
    layer.ffn_in_weight = normal({d, f}, w_std);
    layer.ffn_in_bias = normal({f}, 0.1);
    layer.ffn_out_weight = normal({f, d}, f ? 1.0 / std::sqrt(static_cast<double>(f)) : 0.0);
    layer.ffn_out_bias = normal({d}, 0.1);
    layer.attention_norm_gain = normal({d}, 0.1, 1.0);
    layer.attention_norm_bias = normal({d}, 0.1);
    layer.ffn_norm_gain = normal({d}, 0.1, 1.0);
    layer.ffn_norm_bias = normal({d}, 0.1);
    m.layers.push_back(std::move(layer));
  }
  m.classifier_weight = normal({d, config.num_labels}, w_std);
  m.classifier_bias = normal({config.num_labels}, 0.1);
  if (config.has_lm_head && !config.lm_head_tied) m.lm_head_weight = normal({d, config.lm_head_size}, w_std);
  return m;
}

}  // namespace sprune
