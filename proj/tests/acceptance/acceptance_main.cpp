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

// Acceptance checks: one PASS/FAIL line per criterion. Every oracle here is
// computed independently of the code path it checks (hand counts, finite
// differences, gate equivalence, direct string counting, the CLI binary).

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "sprune/checkpoint.hpp"
#include "sprune/ops.hpp"
#include "sprune/pruning.hpp"
#include "sprune/random.hpp"
#include "sprune/scoring.hpp"
#include "sprune/tools.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sprune;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("sprune-acceptance-" + tag + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& name) const { return path_ / name; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

int shell(const std::string& cmd) {
  const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

TokenBatch random_tokens(std::size_t batch, std::size_t seq, std::size_t vocab, Rng& rng) {
  TokenBatch t{batch, seq, {}};
  for (std::size_t i = 0; i < batch * seq; ++i) t.ids.push_back(static_cast<std::int32_t>(1 + rng.below(vocab - 1)));
  return t;
}

Dataset random_dataset(Rng& rng, std::size_t batches, std::size_t batch_size, std::size_t seq, std::size_t vocab,
                       std::size_t labels) {
  Dataset d;
  d.batch_size = batch_size;
  d.labeled = true;
  for (std::size_t b = 0; b < batches; ++b) {
    Batch batch;
    batch.tokens = random_tokens(batch_size, seq, vocab, rng);
    for (std::size_t i = 0; i < batch_size; ++i) {
      batch.labels.push_back(static_cast<std::int32_t>(rng.below(labels)));
      batch.rows.push_back(b * batch_size + i + 1);
    }
    d.batches.push_back(std::move(batch));
  }
  return d;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Gates gates_from_mask(const PruningMask& m) {
  Gates g;
  for (std::size_t l = 0; l < m.heads.size(); ++l) {
    std::vector<double> h(m.heads[l].begin(), m.heads[l].end()), f(m.ffn[l].begin(), m.ffn[l].end());
    g.heads.push_back(Tensor({h.size()}, h));
    g.ffn.push_back(Tensor({f.size()}, f));
  }
  return g;
}

// Hand count of the transformer block parameters (attention heads with their
// output biases, FFN, two layer norms per layer).
double hand_transformer_params(double layers, double d, double head_size, double heads, double ffn) {
  const double head = 4 * head_size * d + 3 * head_size + d;
  const double feed_forward = 2 * d * ffn + ffn + d;
  return layers * (heads * head + feed_forward + 4 * d);
}

// ------------------------------------------------------------------ AC1

Outcome ac1_parameter_grid() {
  // Reference size grid in percent, rows in print order.
  const double printed[4][4] = {{100, 89, 78, 67}, {94, 83, 72, 61}, {89, 78, 67, 56}, {83, 72, 61, 50}};
  const std::size_t heads[4] = {12, 10, 8, 6};
  const std::size_t ffn[4] = {3072, 2560, 2048, 1536};
  const ModelConfig base = ModelConfig::uniform(12, 768, 12, 3072, 30522, 512, 2);
  const double hand_base = hand_transformer_params(12, 768, 64, 12, 3072);
  double worst = 0.0, worst_literal = 0.0;
  bool counts_agree = true;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      // The cell in row i, column j is the structure with heads[i]
      // heads and ffn[j] neurons: its column axis is the FFN axis.
      ModelConfig c = base;
      c.num_heads.assign(12, heads[i]);
      c.ffn_size.assign(12, ffn[j]);
      const double ratio = 100.0 * transformer_ratio(c, base);
      counts_agree &= static_cast<double>(count_parameters(c).transformer) ==
                      hand_transformer_params(12, 768, 64, double(heads[i]), double(ffn[j]));
      worst = std::max(worst, std::abs(ratio - printed[i][j]));
      worst_literal = std::max(worst_literal, std::abs(ratio - printed[j][i]));
    }
  }
  counts_agree &= static_cast<double>(count_parameters(base).transformer) == hand_base;
  return {counts_agree && worst <= 1.0,
          "16 structures, max |ratio - reference| = " + fmt("%.2f", worst) +
              " pp (grid columns read as FFN size; the printed axis labels taken literally would give " +
              fmt("%.2f", worst_literal) +
              " pp); counts equal the hand formula: " + (counts_agree ? "yes" : "no")};
}

// ------------------------------------------------------------------ AC2

Outcome ac2_speed_grid() {
  const std::size_t heads[4] = {12, 10, 8, 6};
  const std::size_t ffn[4] = {3072, 2560, 2048, 1536};
  const Model base = random_model(ModelConfig::uniform(12, 768, 12, 3072, 1000, 64, 2), 1);
  // Structures share head tensors with their FFN-pruned parent.
  std::vector<Model> models;
  for (std::size_t f : ffn) {
    Model by_ffn = base.detached();
    std::vector<std::size_t> drop;
    for (std::size_t n = f; n < 3072; ++n) drop.push_back(n);
    for (std::size_t l = 0; l < 12; ++l) remove_ffn_neurons(by_ffn, l, drop);
    for (std::size_t h : heads) {
      Model m = by_ffn.detached();
      std::vector<std::size_t> dh;
      for (std::size_t n = h; n < 12; ++n) dh.push_back(n);
      for (std::size_t l = 0; l < 12; ++l) remove_heads(m, l, dh);
      models.push_back(std::move(m));
    }
  }
  const TimingOptions one{1, 64, 0, 1, 3};
  for (const auto& m : models) inference_time(m, one);  // warmup
  // Interleaved rounds so drift affects every structure alike.
  const std::size_t rounds = 5;
  std::vector<std::vector<double>> samples(models.size());
  for (std::size_t r = 0; r < rounds; ++r) {
    for (std::size_t k = 0; k < models.size(); ++k) samples[k].push_back(inference_time(models[k], one).mean_ms);
  }
  std::vector<double> median(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    std::sort(samples[k].begin(), samples[k].end());
    median[k] = samples[k][rounds / 2];
  }
  auto at = [&](std::size_t fi, std::size_t hi) { return median[fi * 4 + hi]; };
  std::size_t violations = 0;
  for (std::size_t fi = 0; fi < 4; ++fi) {
    for (std::size_t hi = 0; hi < 4; ++hi) {
      if (hi + 1 < 4 && !(at(fi, hi + 1) < at(fi, hi))) ++violations;
      if (fi + 1 < 4 && !(at(fi + 1, hi) < at(fi, hi))) ++violations;
    }
  }
  const double speedup = at(0, 0) / at(3, 3);
  std::ostringstream grid;
  for (std::size_t hi = 0; hi < 4; ++hi) {
    grid << (hi ? " " : "") << "H" << heads[hi] << ":";
    for (std::size_t fi = 0; fi < 4; ++fi) grid << (fi ? "/" : "") << fmt("%.2f", at(0, 0) / at(fi, hi));
  }
  return {violations == 0 && speedup >= 1.3,
          "batch 1, seq 64, median of " + std::to_string(rounds) + " interleaved rounds; " +
              std::to_string(violations) + " monotonicity violations of 24; (6,1536) speedup " +
              fmt("%.2fx", speedup) + "; speedups by F=3072/2560/2048/1536 " + grid.str()};
}

// ------------------------------------------------------------------ AC3

Outcome ac3_pruned_vs_gated() {
  Rng rng(3);
  const ModelConfig c = ModelConfig::uniform(2, 32, 4, 64, 50, 16, 3);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < 100; ++trial) {
    const Model original = random_model(c, 1000 + trial);
    PruningMask mask = PruningMask::keep_all(c);
    const double p = rng.uniform();
    for (auto& row : mask.heads) for (auto&& b : row) b = rng.uniform() > p;
    for (auto& row : mask.ffn) for (auto&& b : row) b = rng.uniform() > p;
    Model pruned = original.detached();
    apply_mask(pruned, PruningMask::keep_all(c), mask);
    const Gates g = gates_from_mask(mask);
    const TokenBatch t = random_tokens(1 + rng.below(3), 2 + rng.below(10), 50, rng);
    worst = std::max(worst, max_abs_diff(task_forward(pruned, t), task_forward(original, t, &g)));
  }
  return {worst <= 1e-8, "100 random masks, max |logit diff| = " + fmt("%.3g", worst)};
}

// ------------------------------------------------------------------ AC4

void set_values(const Tensor& t, std::vector<double> v) {
  t.node().data = std::make_shared<const std::vector<double>>(std::move(v));
}

Outcome ac4_gradients() {
  Rng rng(4);
  Model model = random_model(ModelConfig::uniform(2, 32, 4, 64, 50, 16, 3, true, false), 4);
  const TokenBatch tokens = random_tokens(2, 5, 50, rng);
  const std::vector<std::int32_t> labels = {1, 2};
  std::vector<std::int32_t> targets(tokens.ids.begin(), tokens.ids.end());
  // Task loss plus a masked-LM style loss so the untied LM head is reached.
  auto loss = [&](const Model& m) {
    return ops::add(cross_entropy(task_forward(m, tokens), labels), cross_entropy(lm_forward(m, tokens), targets));
  };
  model.set_requires_grad(true);
  Tape tape;
  {
    Tape::Recording rec(tape);
    backward(tape, loss(model));
  }
  Model probe = model.detached();
  const auto live = model.named_parameters();
  const auto probes = probe.named_parameters();
  const double h = 1e-5, rel = 1e-4, floor = 1e-8;
  std::size_t checked = 0, failed = 0;
  double worst_rel = 0.0;
  for (std::size_t k = 0; k < live.size(); ++k) {
    const auto grad = live[k].second.grad();
    const Tensor& p = probes[k].second;
    const std::vector<double> base(p.data().begin(), p.data().end());
    for (std::size_t i = 0; i < base.size(); ++i) {
      auto v = base;
      v[i] = base[i] + h;
      set_values(p, v);
      const double up = loss(probe).item();
      v[i] = base[i] - h;
      set_values(p, v);
      const double down = loss(probe).item();
      set_values(p, base);
      const double numeric = (up - down) / (2 * h);
      const double analytic = grad.empty() ? 0.0 : grad[i];
      const double diff = std::abs(analytic - numeric);
      const double scale = std::max(std::abs(analytic), std::abs(numeric));
      if (scale > floor) worst_rel = std::max(worst_rel, diff / scale);
      if (diff > floor && diff > rel * scale) ++failed;
      ++checked;
    }
  }
  return {failed == 0, std::to_string(checked) + " parameters (all tensors), " + std::to_string(failed) +
                           " outside rel 1e-4 (abs floor 1e-8); worst relative error " + fmt("%.2g", worst_rel)};
}

// ------------------------------------------------------------------ AC5

Gates nudged(const ModelConfig& c, bool head, std::size_t layer, std::size_t unit, double delta) {
  Gates g = Gates::ones(c);
  Tensor& t = head ? g.heads[layer] : g.ffn[layer];
  std::vector<double> v(t.data().begin(), t.data().end());
  v[unit] += delta;
  t = Tensor(t.shape(), v);
  return g;
}

struct GateCheck {
  std::size_t checked = 0, failed = 0;
  double worst_rel = 0.0;
};

void check_gates(const Model& m, const Dataset& d, const LossSpec& loss, const ScoringOptions& opts, GateCheck& out) {
  const ScoreTable s = compute_scores(m, d, loss, opts);
  const double h = 1e-4;
  auto fd = [&](bool head, std::size_t l, std::size_t u) {
    const Gates up = nudged(m.config, head, l, u, h), down = nudged(m.config, head, l, u, -h);
    double total = 0.0;
    std::size_t count = 0;
    const bool per_example = opts.granularity == ScoreGranularity::Example;
    for (std::size_t b = 0; b < d.batches.size(); ++b) {
      const std::size_t rows = d.batches[b].tokens.batch;
      for (std::size_t r = 0; r < (per_example ? rows : 1); ++r) {
        const std::size_t begin = per_example ? r : 0, n = per_example ? 1 : rows;
        const double lu = batch_loss(m, d, b, loss, opts, &up, begin, n).item();
        const double ld = batch_loss(m, d, b, loss, opts, &down, begin, n).item();
        total += std::abs((lu - ld) / (2 * h));
        ++count;
      }
    }
    return total / static_cast<double>(count);
  };
  auto compare = [&](double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric), scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale > 1e-9) out.worst_rel = std::max(out.worst_rel, diff / scale);
    if (diff > 1e-9 && diff > 1e-3 * scale) ++out.failed;
    ++out.checked;
  };
  for (std::size_t l = 0; l < m.config.num_layers; ++l) {
    for (std::size_t u = 0; u < m.config.num_heads[l]; ++u) compare(s.head_scores[l][u], fd(true, l, u));
    for (std::size_t u = 0; u < m.config.ffn_size[l]; ++u) compare(s.ffn_scores[l][u], fd(false, l, u));
  }
}

Outcome ac5_scores() {
  Rng rng(5);
  const ModelConfig c = ModelConfig::uniform(2, 32, 4, 64, 50, 16, 3);
  GateCheck supervised, self;
  {
    const Model m = random_model(c, 51);
    const Dataset d = random_dataset(rng, 3, 4, 6, 50, 3);
    check_gates(m, d, LossSpec::supervised(), {}, supervised);
    check_gates(m, d, LossSpec::supervised(), {ScoreGranularity::Example, {}}, supervised);
  }
  {
    // Self-supervised scores after one pruning step: the reference logits
    // come from the unpruned model.
    Model m = random_model(c, 52);
    Dataset d = random_dataset(rng, 3, 4, 6, 50, 3);
    const LossSpec kl = LossSpec::self_supervised(m, d);
    d.labeled = false;
    for (auto& b : d.batches) b.labels.clear();
    const std::size_t head[] = {2};
    const std::size_t neurons[] = {3, 17, 40, 63};
    remove_heads(m, 1, head);
    remove_ffn_neurons(m, 0, neurons);
    check_gates(m, d, kl, {}, self);
  }
  return {supervised.failed == 0 && self.failed == 0,
          "supervised " + std::to_string(supervised.checked - supervised.failed) + "/" +
              std::to_string(supervised.checked) + " (batch and example granularity), self-supervised after pruning " +
              std::to_string(self.checked - self.failed) + "/" + std::to_string(self.checked) +
              " within rel 1e-3; worst relative error " + fmt("%.2g", std::max(supervised.worst_rel, self.worst_rel))};
}

// ------------------------------------------------------------------ AC6

Outcome ac6_kl() {
  Rng rng(6);
  std::vector<double> v(4 * 7);
  for (auto& x : v) x = rng.uniform(-3.0, 3.0);
  const Tensor q({4, 7}, v);
  const double self_kl = kl_loss(q, q).item();

  const Tensor ref({4, 7}, v, true);
  std::vector<double> w(4 * 7);
  for (auto& x : w) x = rng.uniform(-3.0, 3.0);
  const Tensor p({4, 7}, w, true);
  Tape tape;
  {
    Tape::Recording rec(tape);
    backward(tape, kl_loss(ops::scale(ref, 1.0), p));
  }
  bool stopped = true;
  for (double g : ref.grad()) stopped &= g == 0.0;
  bool p_reached = false;
  for (double g : p.grad()) p_reached |= g != 0.0;

  const double closed = kl_loss(Tensor({1, 2}, {0.0, 0.0}), Tensor({1, 2}, {0.0, std::log(3.0)})).item();
  const bool pass = self_kl == 0.0 && stopped && p_reached && std::abs(closed - 0.14384) <= 1e-5;
  return {pass, "KL(q,q) = " + fmt("%.17g", self_kl) + "; reference gradient identically zero: " +
                    (stopped ? "yes" : "no") + "; KL([.5,.5],[.25,.75]) = " + fmt("%.8f", closed)};
}

// ------------------------------------------------------------------ AC7

std::vector<std::size_t> front_loaded(std::size_t total, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(total / n + (k < total % n ? 1 : 0));
  return out;
}

Outcome ac7_schedule() {
  const std::size_t L = 12;
  // Real widths, narrow hidden size: head_size 1 keeps scoring cheap.
  const ModelConfig c = ModelConfig::uniform(L, 12, 12, 3072, 20, 8, 2);
  const Model original = random_model(c, 7);
  Rng rng(7);
  const Dataset data = random_dataset(rng, 1, 2, 4, 20, 2);
  struct Variant {
    bool even_heads, even_ffn;
    std::size_t multiple_of;
  };
  const Variant variants[] = {{true, true, 1}, {false, false, 1}, {false, false, 4}, {true, false, 4}};
  std::size_t runs = 0;
  std::vector<std::string> problems;
  for (std::size_t n : {1, 2, 4, 8, 16}) {
    for (const Variant& v : variants) {
      TransformerPruningConfig cfg;
      cfg.target_num_of_heads = 6;
      cfg.target_ffn_size = 1536;
      cfg.n_iters = n;
      cfg.head_even_masking = v.even_heads;
      cfg.ffn_even_masking = v.even_ffn;
      cfg.multiple_of = v.multiple_of;
      const std::string tag = "n_iters=" + std::to_string(n) + " even=" + std::to_string(v.even_heads) + "/" +
                              std::to_string(v.even_ffn) + " multiple_of=" + std::to_string(v.multiple_of);
      const auto head_q = v.even_heads ? front_loaded(6, n) : front_loaded(L * 6, n);
      const auto ffn_q = v.even_ffn ? front_loaded(1536, n) : front_loaded(L * 1536, n);

      std::set<std::pair<std::size_t, std::size_t>> gone_heads, gone_ffn;
      std::size_t k = 0;
      bool ok = true;
      TransformerPruneOptions opts;
      opts.progress = [&](const IterationLog& log) {
        std::vector<std::size_t> per_layer_h(L), per_layer_f(L);
        for (const auto& u : log.pruned_heads) ok &= gone_heads.insert(u).second, ++per_layer_h[u.first];
        for (const auto& u : log.pruned_ffn) ok &= gone_ffn.insert(u).second, ++per_layer_f[u.first];
        const std::size_t hq = head_q[k] * (v.even_heads ? L : 1), fq = ffn_q[k] * (v.even_ffn ? L : 1);
        ok &= log.pruned_heads.size() == hq && log.pruned_ffn.size() == fq;
        for (std::size_t l = 0; l < L; ++l) {
          if (v.even_heads) ok &= per_layer_h[l] == head_q[k];
          if (v.even_ffn) ok &= per_layer_f[l] == ffn_q[k];
        }
        ++k;
      };
      Model m = original.detached();
      const auto result = transformer_prune(m, data, cfg, opts);
      ++runs;
      ok &= k == n;
      std::size_t total_heads = 0, total_ffn = 0;
      for (std::size_t l = 0; l < L; ++l) {
        total_heads += m.config.num_heads[l];
        total_ffn += m.config.ffn_size[l];
        if (v.even_heads) ok &= m.config.num_heads[l] == 6;
        if (v.even_ffn) ok &= m.config.ffn_size[l] == 1536;
        ok &= m.config.ffn_size[l] % v.multiple_of == 0;
        for (std::size_t u = 0; u < 12; ++u) ok &= result.mask.heads[l][u] == !gone_heads.count({l, u});
        for (std::size_t u = 0; u < 3072; ++u) ok &= result.mask.ffn[l][u] == !gone_ffn.count({l, u});
      }
      ok &= total_heads == 6 * L && total_ffn == 1536 * L;
      if (!ok) problems.push_back(tag);
    }
  }
  std::string detail = std::to_string(runs) + " runs (n_iters 1/2/4/8/16 x even, uneven, uneven+multiple_of 4, "
                                              "even heads+uneven FFN multiple_of 4)";
  for (const auto& p : problems) detail += "; failed " + p;
  return {problems.empty(), detail};
}

// ------------------------------------------------------------------ AC8

Outcome ac8_vocabulary() {
  ScratchDir dir("ac8");
  Rng rng(8);
  std::size_t failures = 0, checks = 0;
  double worst = 0.0;
  for (bool tied : {true, false}) {
    FixtureSpec spec;
    spec.lm_head = true;
    spec.lm_head_tied = tied;
    spec.seed = tied ? 81 : 82;
    make_fixture(spec, dir / (tied ? "tied" : "untied"));
    const fs::path model_dir = dir / (tied ? "tied" : "untied") / "model";
    const Vocabulary vocab = Vocabulary::load(model_dir / "vocab.txt");
    const Model original = load_model(model_dir);

    // A pre-tokenized corpus counted here with plain string counting.
    const fs::path corpus = dir / "corpus.txt";
    std::map<std::string, std::size_t> counts;
    {
      std::ofstream out(corpus);
      for (std::size_t line = 0; line < 30; ++line) {
        for (std::size_t w = 0; w < 6; ++w) {
          const double u = rng.uniform();
          std::string tok = rng.uniform() < 0.1 ? "oov" + std::to_string(rng.below(5))
                                                : vocab.tokens()[5 + std::size_t(u * u * u * double(vocab.size() - 5))];
          ++counts[tok];
          out << (w ? " " : "") << tok;
        }
        out << '\n';
      }
    }
    for (std::size_t min_count : {1, 2, 3}) {
      std::vector<std::string> expected;
      const auto specials = vocab.specials().all();
      for (const auto& tok : vocab.tokens()) {
        const bool special = std::find(specials.begin(), specials.end(), tok) != specials.end();
        if (special || counts[tok] >= min_count) expected.push_back(tok);
      }
      Model m = original.detached();
      const auto r = vocabulary_prune(m, vocab, corpus, {min_count, true}, true);
      ++checks;
      bool ok = r.vocab.tokens() == expected && m.config.vocab_size == expected.size();
      for (const auto& s : specials) ok &= r.vocab.find(s).has_value();
      // Tokenizer and model mappings agree row by row.
      const std::size_t d = m.config.hidden_size;
      for (std::size_t i = 0; i < r.vocab.size() && ok; ++i) {
        const std::int32_t old = r.mapping.new_to_old[i];
        ok &= r.vocab.token(std::int32_t(i)) == vocab.token(old);
        for (std::size_t j = 0; j < d; ++j) ok &= m.word_embedding.at(i, j) == original.word_embedding.at(old, j);
      }
      // Sentences made only of surviving tokens keep their logits.
      std::vector<std::int32_t> surviving;
      for (std::int32_t id = 0; id < std::int32_t(vocab.size()); ++id) {
        if (!vocab.is_special(id) && r.mapping.kept(id)) surviving.push_back(id);
      }
      if (!surviving.empty()) {
        TokenBatch before{3, 8, {}};
        for (std::size_t i = 0; i < 24; ++i) {
          before.ids.push_back(i % 8 == 0 ? vocab.cls_id() : surviving[rng.below(surviving.size())]);
        }
        const TokenBatch after{3, 8, r.mapping.map(before.ids)};
        worst = std::max(worst, max_abs_diff(task_forward(m, after), task_forward(original, before)));
        const Tensor lm_old = lm_forward(original, before), lm_new = lm_forward(m, after);
        for (std::size_t row = 0; row < 24; ++row) {
          for (std::size_t i = 0; i < r.vocab.size(); ++i) {
            worst = std::max(worst, std::abs(lm_new.at(row, i) - lm_old.at(row, std::size_t(r.mapping.new_to_old[i]))));
          }
        }
      }
      if (!ok) ++failures;
    }
  }
  return {failures == 0 && worst <= 1e-10,
          std::to_string(checks - failures) + "/" + std::to_string(checks) +
              " kept sets and mappings exact (tied and untied LM head, min_count 1..3); max logit change " +
              fmt("%.3g", worst)};
}

// ------------------------------------------------------------------ AC9

Outcome ac9_pipeline(const std::string& cli) {
  ScratchDir dir("ac9");
  if (shell(cli + " make-fixture --seed 9 --output-dir " + quote(dir.path())) != 0) return {false, "make-fixture failed"};
  TransformerPruningConfig t;
  t.target_num_of_heads = 2;
  t.target_ffn_size = 32;
  t.n_iters = 4;
  t.head_even_masking = false;
  t.ffn_even_masking = false;
  t.multiple_of = 4;
  const VocabularyPruningConfig v{2, true};
  GeneralConfig g;
  g.output_dir = dir / "out_config";
  write_json(dir / "t.json", to_json(t));
  write_json(dir / "v.json", to_json(v));
  write_json(dir / "g.json", to_json(g));
  const std::string cmd = cli + " prune-pipeline --model-dir " + quote(dir / "model") + " --vocab-config " +
                          quote(dir / "v.json") + " --transformer-config " + quote(dir / "t.json") +
                          " --general-config " + quote(dir / "g.json") + " --corpus " + quote(dir / "corpus.txt") +
                          " --dataset " + quote(dir / "dev.tsv") + " --output-dir " + quote(dir / "cli");
  const int code = shell(cmd);
  if (code != 0) return {false, "prune-pipeline exited " + std::to_string(code)};
  const Model pruned = load_model(dir / "cli");
  std::size_t heads = 0, ffn = 0;
  for (std::size_t l = 0; l < pruned.config.num_layers; ++l) heads += pruned.config.num_heads[l], ffn += pruned.config.ffn_size[l];
  if (shell(cli + " summary --model-dir " + quote(dir / "cli") + " --report-json " + quote(dir / "summary.json")) != 0) {
    return {false, "summary failed"};
  }
  const json s = json::parse(read_file(dir / "summary.json"));
  // 2 layers at d=32, head size 8: four heads and 64 neurons in total remain.
  // Per-layer terms that do not scale with width: the second layer's FFN output bias and norms.
  const double hand = hand_transformer_params(1, 32, 8, 4, 64) + 32 + 4 * 32;
  const bool targets = heads == 4 && ffn == 64 && s["transformer"].get<double>() == hand;

  // The same run through the library.
  const Vocabulary vocab = Vocabulary::load(dir / "model" / "vocab.txt");
  const Dataset data = load_dataset(dir / "dev.tsv", vocab, DatasetOptions{});
  GeneralConfig api = g;
  api.output_dir = dir / "api";
  pipeline_prune(load_model(dir / "model"), vocab, dir / "corpus.txt", data, api, v, t);
  bool identical = true;
  for (const char* f : {"weights.bin", "config.json", "manifest.json", "vocab.txt"}) {
    identical &= read_file(dir / "cli" / f) == read_file(dir / "api" / f);
  }
  return {targets && identical, "exit 0; heads " + std::to_string(heads) + "/4, FFN " + std::to_string(ffn) +
                                    "/64, summary transformer " + s["transformer"].dump() + " vs hand count " +
                                    fmt("%.0f", hand) + "; CLI and API outputs bit-identical: " +
                                    (identical ? "yes" : "no")};
}

// ------------------------------------------------------------------ AC10

Outcome ac10_subsample(const std::string& cli) {
  ScratchDir dir("ac10");
  if (shell(cli + " make-fixture --seed 10 --dataset-rows 80 --output-dir " + quote(dir.path())) != 0) {
    return {false, "make-fixture failed"};
  }
  const std::string base = cli + " score-study --model-dir " + quote(dir / "model") + " --dataset " +
                           quote(dir / "dev.tsv") + " --batch-size 8 --max-len 32 --report-json ";
  if (shell(base + quote(dir / "a.json")) != 0 || shell(base + quote(dir / "b.json")) != 0) {
    return {false, "score-study failed"};
  }
  const json a = json::parse(read_file(dir / "a.json")), b = json::parse(read_file(dir / "b.json"));
  bool ok = a == b && a["fractions"].size() == 10 && a["runs"].size() == 50;
  std::map<double, std::set<std::vector<std::size_t>>> distinct;
  for (const auto& run : a["runs"]) {
    const double f = run["fraction"].get<double>();
    const auto rows = run["rows"].get<std::vector<std::size_t>>();
    distinct[f].insert(rows);
    ok &= rows.size() == std::size_t(std::llround(f * 80.0)) || rows.size() == std::size_t(std::ceil(f * 80.0));
    if (f == 1.0) ok &= std::abs(run["head_spearman"].get<double>() - 1.0) < 1e-12;
  }
  ok &= distinct[0.5].size() == 5;
  std::string curve;
  for (const auto& row : a["fractions"]) {
    curve += (curve.empty() ? "" : " ") + fmt("%.1f:", row["fraction"].get<double>()) +
             (row["mean_head_spearman"].is_null() ? std::string("n/a")
                                                  : fmt("%.2f", row["mean_head_spearman"].get<double>()));
  }
  return {ok, "10 fractions x 5 seeds, repeat run identical: " + std::string(a == b ? "yes" : "no") +
                  "; mean head rank correlation " + curve};
}

}  // namespace

int main() {
  const std::string cli = std::string("'") + SPRUNE_CLI_PATH + "'";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1", ac1_parameter_grid},
      {"AC2", ac2_speed_grid},
      {"AC3", ac3_pruned_vs_gated},
      {"AC4", ac4_gradients},
      {"AC5", ac5_scores},
      {"AC6", ac6_kl},
      {"AC7", ac7_schedule},
      {"AC8", ac8_vocabulary},
      {"AC9", [&] { return ac9_pipeline(cli); }},
      {"AC10", [&] { return ac10_subsample(cli); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << name << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << " [" << fmt("%.1f", seconds)
              << " s]" << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
