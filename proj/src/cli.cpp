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

#include "sprune/cli.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "sprune/checkpoint.hpp"
#include "sprune/config.hpp"
#include "sprune/errors.hpp"
#include "sprune/kernels.hpp"
#include "sprune/pruning.hpp"
#include "sprune/tools.hpp"

namespace sprune {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Flag values shared by the subcommands; each subcommand binds the subset it
// accepts.
struct Flags {
  std::string model_dir, output_dir, reference_dir;
  std::string general_config, vocab_config, transformer_config;
  std::string corpus, dataset, vocab_file, mask, scores_json, report_json;
  std::string adaptor = "task_logits";
  bool labeled = false, unlabeled = false;
  bool pretokenized = false, lowercase = false, nfc = false;
  std::uint64_t seed = 0;
  double subsample = 1.0;
  std::size_t batch_size = 32, max_len = 128;
  int threads = 0;

  // bench
  TimingOptions timing;
  // make-fixture
  FixtureSpec fixture;
  bool untied = false;
  // score-study
  std::vector<double> fractions = StudyOptions{}.fractions;
  std::vector<std::uint64_t> seeds = StudyOptions{}.seeds;
  std::string granularity = "batch";
};

// Rewrites `--pruning_mode X` into the matching subcommand.
std::vector<std::string> apply_mode_alias(std::vector<std::string> args) {
  static const std::map<std::string, std::string> modes = {
      {"vocabulary", "prune-vocab"}, {"transformer", "prune-transformer"}, {"pipeline", "prune-pipeline"}};
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string value;
    std::size_t width = 0;
    for (const std::string flag : {"--pruning_mode", "--pruning-mode"}) {
      if (args[i] == flag && i + 1 < args.size()) {
        value = args[i + 1];
        width = 2;
      } else if (args[i].starts_with(flag + "=")) {
        value = args[i].substr(flag.size() + 1);
        width = 1;
      }
    }
    if (width == 0) continue;
    const auto it = modes.find(value);
    if (it == modes.end()) throw ConfigError("--pruning_mode must be vocabulary, transformer or pipeline");
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + width));
    args.insert(args.begin() + 1, it->second);
    break;
  }
  return args;
}

void write_json(const std::string& path, const json& j) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + path);
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string fraction_text(std::size_t part, std::size_t whole) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", whole ? 100.0 * double(part) / double(whole) : 0.0);
  return buf;
}

Vocabulary load_vocab(const Flags& f) {
  TokenizerOptions opts;
  opts.lowercase = f.lowercase;
  opts.nfc = f.nfc;
  const fs::path path = f.vocab_file.empty() ? fs::path(f.model_dir) / "vocab.txt" : fs::path(f.vocab_file);
  return Vocabulary::load(path, opts);
}

GeneralConfig load_general(const Flags& f) {
  GeneralConfig g = f.general_config.empty() ? GeneralConfig{} : parse_config<GeneralConfig>(f.general_config);
  if (!f.output_dir.empty()) g.output_dir = f.output_dir;
  g.require_supported_device();
  return g;
}

Dataset load_data(const Flags& f, const Vocabulary& vocab, const TransformerPruningConfig& cfg) {
  if (cfg.pruning_method == PruningMethod::Mask && f.dataset.empty()) return {};
  if (f.dataset.empty()) throw ConfigError("--dataset is required for iterative pruning");
  DatasetOptions opts;
  opts.batch_size = f.batch_size;
  opts.max_len = f.max_len;
  opts.labeled = f.labeled || (!f.unlabeled && !cfg.use_logits);
  opts.subsample = f.subsample;
  opts.seed = f.seed;
  return load_dataset(f.dataset, vocab, opts);
}

TransformerPruneOptions prune_options(const Flags& f, const TransformerPruningConfig& cfg, std::ostream& err) {
  TransformerPruneOptions o;
  o.adaptor = Adaptor::parse(f.adaptor);
  if (!f.mask.empty()) o.mask = PruningMask::load(f.mask);
  if (cfg.pruning_method == PruningMethod::Mask && !o.mask) throw ConfigError("mask pruning needs --mask");
  const std::size_t n = cfg.n_iters;
  o.progress = [&err, n](const IterationLog& log) {
    err << "iteration " << log.iteration + 1 << "/" << n << ": pruned " << log.pruned_heads.size() << " heads, "
        << log.pruned_ffn.size() << " FFN neurons; heads [" << join(log.heads_per_layer) << "] ffn ["
        << join(log.ffn_per_layer) << "] (" << log.seconds << " s)\n";
  };
  if (!f.scores_json.empty()) {
    o.on_scores = [path = f.scores_json](std::size_t iteration, const ScoreTable& s) {
      json j = s.to_json();
      j["iteration"] = iteration;
      write_json(path, j);
    };
  }
  return o;
}

void report_done(std::ostream& out, const fs::path& dir, const PruneReport& r) {
  out << "wrote " << dir.string() << ": parameters " << r.initial_parameters.total << " -> "
      << r.final_parameters.total << " (" << fraction_text(r.final_parameters.total, r.initial_parameters.total)
      << "), transformer " << r.initial_parameters.transformer << " -> " << r.final_parameters.transformer << " ("
      << fraction_text(r.final_parameters.transformer, r.initial_parameters.transformer) << ")\n";
}

void print_warnings(std::ostream& err, const PruneReport& r) {
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
}

int cmd_prune_vocab(const Flags& f, std::ostream& out, std::ostream& err) {
  const GeneralConfig general = load_general(f);
  const auto vcfg = f.vocab_config.empty() ? VocabularyPruningConfig{}
                                           : parse_config<VocabularyPruningConfig>(f.vocab_config);
  Model model = load_model(f.model_dir);
  const Vocabulary vocab = load_vocab(f);
  auto result = vocabulary_prune(model, vocab, f.corpus, vcfg, f.pretokenized);
  print_warnings(err, result.report);
  const json report = result.report.to_json();
  save_outputs(general.output_dir, model, result.vocab, report);
  write_json(f.report_json, report);
  report_done(out, general.output_dir, result.report);
  return 0;
}

int cmd_prune_transformer(const Flags& f, std::ostream& out, std::ostream& err) {
  const GeneralConfig general = load_general(f);
  const auto tcfg = parse_config<TransformerPruningConfig>(f.transformer_config);
  const auto options = prune_options(f, tcfg, err);
  Model model = load_model(f.model_dir);
  const Vocabulary vocab = load_vocab(f);
  const Dataset data = load_data(f, vocab, tcfg);
  auto result = transformer_prune(model, data, tcfg, options);
  const json report = result.report.to_json();
  save_outputs(general.output_dir, model, vocab, report);
  write_json(f.report_json, report);
  report_done(out, general.output_dir, result.report);
  return 0;
}

int cmd_prune_pipeline(const Flags& f, std::ostream& out, std::ostream& err) {
  const GeneralConfig general = load_general(f);
  const auto vcfg = f.vocab_config.empty() ? VocabularyPruningConfig{}
                                           : parse_config<VocabularyPruningConfig>(f.vocab_config);
  const auto tcfg = parse_config<TransformerPruningConfig>(f.transformer_config);
  const auto options = prune_options(f, tcfg, err);
  Model model = load_model(f.model_dir);
  const Vocabulary vocab = load_vocab(f);
  const Dataset data = load_data(f, vocab, tcfg);
  auto result = pipeline_prune(std::move(model), vocab, f.corpus, data, general, vcfg, tcfg, options, f.pretokenized);
  print_warnings(err, result.report);
  write_json(f.report_json, result.report.to_json());
  report_done(out, general.output_dir, result.report);
  return 0;
}

int cmd_summary(const Flags& f, std::ostream& out) {
  const Model model = load_model(f.model_dir);
  std::optional<Model> reference;
  if (!f.reference_dir.empty()) reference = load_model(f.reference_dir);
  const ModelConfig* ref = reference ? &reference->config : nullptr;
  out << summary(model.config, ref);
  write_json(f.report_json, summary_json(model.config, ref));
  return 0;
}

int cmd_bench(const Flags& f, std::ostream& out) {
  const Model model = load_model(f.model_dir);
  const TimingResult t = inference_time(model, f.timing);
  char line[200];
  std::snprintf(line, sizeof(line), "latency: mean %.3f ms, std %.3f ms, median-of-means %.3f ms over %zu rounds\n",
                t.mean_ms, t.std_ms, t.median_of_means_ms, t.samples_ms.size());
  out << line;
  json j = {{"model", t.to_json()}};
  if (!f.reference_dir.empty()) {
    const Model reference = load_model(f.reference_dir);
    const TimingResult r = inference_time(reference, f.timing);
    const double speedup = r.median_of_means_ms / t.median_of_means_ms;
    std::snprintf(line, sizeof(line), "reference: mean %.3f ms, std %.3f ms, median-of-means %.3f ms\nspeedup: %.2fx\n",
                  r.mean_ms, r.std_ms, r.median_of_means_ms, speedup);
    out << line;
    j["reference"] = r.to_json();
    j["speedup"] = speedup;
  }
  write_json(f.report_json, j);
  return 0;
}

int cmd_make_fixture(const Flags& f, std::ostream& out) {
  FixtureSpec spec = f.fixture;
  spec.lm_head_tied = !f.untied;
  if (f.untied) spec.lm_head = true;
  make_fixture(spec, f.output_dir);
  const ParameterCounts p = count_parameters(spec.model_config());
  out << "wrote fixture to " << f.output_dir << " (" << p.total << " parameters)\n";
  return 0;
}

int cmd_score_study(const Flags& f, std::ostream& out) {
  const Model model = load_model(f.model_dir);
  const Vocabulary vocab = load_vocab(f);
  StudyOptions opts;
  opts.fractions = f.fractions;
  opts.seeds = f.seeds;
  opts.data.batch_size = f.batch_size;
  opts.data.max_len = f.max_len;
  if (f.granularity == "example") {
    opts.scoring.granularity = ScoreGranularity::Example;
  } else if (f.granularity != "batch") {
    throw ConfigError("--granularity must be batch or example");
  }
  opts.scoring.adaptor = Adaptor::parse(f.adaptor);
  const json study = score_study(model, vocab, f.dataset, opts);
  out << "fraction  head rank corr  ffn rank corr\n";
  for (const auto& row : study.at("fractions")) {
    auto fmt = [](const json& v) {
      char b[32];
      if (v.is_null()) return std::string("n/a");
      std::snprintf(b, sizeof(b), "%.4f", v.get<double>());
      return std::string(b);
    };
    char line[96];
    std::snprintf(line, sizeof(line), "%8.2f  %14s  %13s\n", row.at("fraction").get<double>(),
                  fmt(row.at("mean_head_spearman")).c_str(), fmt(row.at("mean_ffn_spearman")).c_str());
    out << line;
  }
  write_json(f.report_json, study);
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structured pruning for transformer encoders", "sprune"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--threads", f.threads, "OpenMP threads for kernels and scoring (0 = runtime default)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--report-json", f.report_json, "Also write the machine-readable report here");

  auto model_dir = [&](CLI::App* sc, bool required = true) {
    auto* o = sc->add_option("--model-dir", f.model_dir, "Checkpoint directory (config.json, weights.bin, manifest.json)");
    if (required) o->required();
  };
  auto tokenizer = [&](CLI::App* sc) {
    sc->add_option("--vocab", f.vocab_file, "vocab.txt to use instead of <model-dir>/vocab.txt");
    sc->add_flag("--lowercase", f.lowercase, "Lowercase text before tokenizing");
    sc->add_flag("--nfc", f.nfc, "NFC-normalize text before tokenizing");
  };
  auto output = [&](CLI::App* sc) {
    sc->add_option("--output-dir", f.output_dir, "Output directory (overrides the general config)");
    sc->add_option("--general-config", f.general_config, "GeneralConfig JSON")->check(CLI::ExistingFile);
  };
  auto corpus = [&](CLI::App* sc) {
    sc->add_option("--corpus", f.corpus, "UTF-8 corpus, one document per line")->required();
    sc->add_option("--vocab-config", f.vocab_config, "VocabularyPruningConfig JSON")->check(CLI::ExistingFile);
    sc->add_flag("--pre-tokenized", f.pretokenized, "Corpus lines are whitespace-separated vocabulary tokens");
  };
  auto transformer = [&](CLI::App* sc) {
    sc->add_option("--transformer-config", f.transformer_config, "TransformerPruningConfig JSON")
        ->required()
        ->check(CLI::ExistingFile);
    sc->add_option("--dataset", f.dataset, "TSV dataset for importance scores");
    auto* lab = sc->add_flag("--labeled", f.labeled, "Rows are label<TAB>text");
    auto* unl = sc->add_flag("--unlabeled", f.unlabeled, "Rows are text only");
    lab->excludes(unl);
    sc->add_option("--seed", f.seed, "Subsample seed");
    sc->add_option("--subsample", f.subsample, "Fraction of dataset rows to use")->check(CLI::Range(0.0, 1.0));
    sc->add_option("--batch-size", f.batch_size, "Examples per batch")->check(CLI::PositiveNumber);
    sc->add_option("--max-len", f.max_len, "Maximum sequence length including [CLS] and [SEP]")
        ->check(CLI::Range(2, 1 << 20));
    sc->add_option("--adaptor", f.adaptor, "Logits source: task_logits or lm_logits");
    sc->add_option("--mask", f.mask, "Keep mask JSON for mask-mode pruning")->check(CLI::ExistingFile);
    sc->add_option("--scores-json", f.scores_json, "Write the last iteration's scores here");
  };

  auto* vocab_cmd = app.add_subcommand("prune-vocab", "Drop tokens that are rare in a corpus");
  model_dir(vocab_cmd);
  tokenizer(vocab_cmd);
  output(vocab_cmd);
  corpus(vocab_cmd);

  auto* trm_cmd = app.add_subcommand("prune-transformer", "Remove attention heads and FFN neurons");
  model_dir(trm_cmd);
  tokenizer(trm_cmd);
  output(trm_cmd);
  transformer(trm_cmd);

  auto* pipe_cmd = app.add_subcommand("prune-pipeline", "Transformer pruning followed by vocabulary pruning");
  model_dir(pipe_cmd);
  tokenizer(pipe_cmd);
  output(pipe_cmd);
  corpus(pipe_cmd);
  transformer(pipe_cmd);

  auto* sum_cmd = app.add_subcommand("summary", "Parameter counts per component");
  model_dir(sum_cmd);
  sum_cmd->add_option("--reference-dir", f.reference_dir, "Checkpoint to report percentages against");

  auto* bench_cmd = app.add_subcommand("bench", "Measure inference latency");
  model_dir(bench_cmd);
  bench_cmd->add_option("--reference-dir", f.reference_dir, "Checkpoint to compute the speedup against");
  bench_cmd->add_option("--batch-size", f.timing.batch_size, "Batch size")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seq-len", f.timing.seq_len, "Sequence length")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--warmup", f.timing.warmup_rounds, "Unmeasured warmup rounds");
  bench_cmd->add_option("--rounds", f.timing.measure_rounds, "Measured rounds")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", f.timing.seed, "Seed for the random input ids");

  auto* fix_cmd = app.add_subcommand("make-fixture", "Write a random-weight model with toy data");
  fix_cmd->add_option("--output-dir", f.output_dir, "Fixture directory")->required();
  fix_cmd->add_option("--layers", f.fixture.layers)->check(CLI::PositiveNumber);
  fix_cmd->add_option("--hidden", f.fixture.hidden)->check(CLI::PositiveNumber);
  fix_cmd->add_option("--heads", f.fixture.heads)->check(CLI::PositiveNumber);
  fix_cmd->add_option("--ffn", f.fixture.ffn);
  fix_cmd->add_option("--head-size", f.fixture.head_size, "Per-head width (default hidden/heads)");
  fix_cmd->add_option("--vocab-size", f.fixture.vocab)->check(CLI::PositiveNumber);
  fix_cmd->add_option("--max-seq-len", f.fixture.max_seq_len)->check(CLI::PositiveNumber);
  fix_cmd->add_option("--labels", f.fixture.labels)->check(CLI::PositiveNumber);
  fix_cmd->add_flag("--lm-head", f.fixture.lm_head, "Add an LM head tied to the embedding");
  fix_cmd->add_flag("--untied", f.untied, "Give the LM head its own weights");
  fix_cmd->add_option("--seed", f.fixture.seed);
  fix_cmd->add_option("--corpus-lines", f.fixture.corpus_lines);
  fix_cmd->add_option("--dataset-rows", f.fixture.dataset_rows);

  auto* study_cmd = app.add_subcommand("score-study", "Score stability across seeded data subsamples");
  model_dir(study_cmd);
  tokenizer(study_cmd);
  study_cmd->add_option("--dataset", f.dataset, "Labeled TSV dataset")->required();
  study_cmd->add_option("--fractions", f.fractions, "Subsample fractions")->check(CLI::Range(0.0, 1.0));
  study_cmd->add_option("--seeds", f.seeds, "Subsample seeds");
  study_cmd->add_option("--batch-size", f.batch_size)->check(CLI::PositiveNumber);
  study_cmd->add_option("--max-len", f.max_len)->check(CLI::Range(2, 1 << 20));
  study_cmd->add_option("--granularity", f.granularity, "batch or example");
  study_cmd->add_option("--adaptor", f.adaptor, "Logits source: task_logits or lm_logits");

  CLI::App* current = &app;
  try {
    args = apply_mode_alias(std::move(args));
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
    for (auto* sc : app.get_subcommands()) current = sc;
    if (f.threads > 0) kernels::set_threads(f.threads);

    if (current == vocab_cmd) return cmd_prune_vocab(f, out, err);
    if (current == trm_cmd) return cmd_prune_transformer(f, out, err);
    if (current == pipe_cmd) return cmd_prune_pipeline(f, out, err);
    if (current == sum_cmd) return cmd_summary(f, out);
    if (current == bench_cmd) return cmd_bench(f, out);
    if (current == fix_cmd) return cmd_make_fixture(f, out);
    if (current == study_cmd) return cmd_score_study(f, out);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    for (auto* sc : app.get_subcommands()) current = sc;
    err << '\n' << current->help();
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n\n" << current->help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace sprune
