/*
 * Copyright 2026 The UniRec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line driver: synth | prepare | train | eval | sweep | bench.
// Exit codes: 0 ok, 2 usage, 3 I/O, 4 configuration, 5 numeric/input,
// 6 checkpoint compatibility.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "unirec/bench.hpp"
#include "unirec/config.hpp"
#include "unirec/evaluation.hpp"
#include "unirec/report_io.hpp"
#include "unirec/synthetic.hpp"
#include "unirec/training.hpp"
#include "unirec/unirec.hpp"

namespace fs = std::filesystem;
using namespace unirec;

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string run_dir_override;
  bool force = false;
};

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty() ? RunConfig()
                                           : RunConfig::from_file(args.config_path);
  cfg.apply_overrides(args.overrides);
  if (!args.run_dir_override.empty()) cfg.set("run.dir", args.run_dir_override);
  return cfg;
}

fs::path run_dir(const RunConfig& cfg) { return fs::path(cfg.str("run.dir")); }

void ensure_fresh(const fs::path& target, bool force) {
  if (fs::exists(target) && !force) {
    throw IoError(target.string() + " already exists (use --force to overwrite)");
  }
}

std::uint64_t fnv1a_file(const fs::path& path, std::uint64_t h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash " + path.string());
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

struct PreparedData {
  Corpus corpus;
  std::vector<ImpressionLog> train, valid, test;
  std::string dataset_id;
};

PreparedData load_prepared(const RunConfig& cfg) {
  const fs::path dir = run_dir(cfg);
  for (const char* name : {"corpus.cache", "imps.train.cache",
                           "imps.valid.cache", "imps.test.cache"}) {
    if (!fs::exists(dir / name)) {
      throw UsageError("missing " + (dir / name).string() + "; run `prepare` first");
    }
  }
  PreparedData data;
  data.corpus = load_corpus_cache((dir / "corpus.cache").string());
  data.train = load_impressions_cache((dir / "imps.train.cache").string());
  data.valid = load_impressions_cache((dir / "imps.valid.cache").string());
  data.test = load_impressions_cache((dir / "imps.test.cache").string());
  std::uint64_t h = 1469598103934665603ULL;
  for (const char* name : {"corpus.cache", "imps.train.cache",
                           "imps.valid.cache", "imps.test.cache"}) {
    h = fnv1a_file(dir / name, h);
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  data.dataset_id = hex;
  return data;
}

void print_summary(const DatasetSummary& s, const char* split_note) {
  std::printf("# Users               %10zu    # News            %10zu\n",
              s.users, s.news);
  std::printf("# Impressions         %10zu    # Click behaviors %10zu\n",
              s.impressions, s.clicks);
  std::printf("Avg. news title len.  %10.2f    # Categories      %10zu\n",
              s.avg_title_len, s.categories);
  if (split_note && *split_note) std::printf("%s\n", split_note);
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const CommonArgs& common, const std::string& out_override) {
  RunConfig cfg = load_config(common);
  const fs::path out = out_override.empty() ? run_dir(cfg) / "data"
                                            : fs::path(out_override);
  fs::create_directories(out);
  for (const char* name : {"news.tsv", "behaviors.train.tsv",
                           "behaviors.valid.tsv", "behaviors.test.tsv"}) {
    ensure_fresh(out / name, common.force);
  }
  SyntheticData data = generate_synthetic(cfg.synthetic_spec());
  write_news_tsv(data.corpus, (out / "news.tsv").string());
  write_behaviors_tsv(data.train, data.corpus, (out / "behaviors.train.tsv").string());
  write_behaviors_tsv(data.valid, data.corpus, (out / "behaviors.valid.tsv").string());
  write_behaviors_tsv(data.test, data.corpus, (out / "behaviors.test.tsv").string());

  std::vector<ImpressionLog> all = data.train;
  all.insert(all.end(), data.valid.begin(), data.valid.end());
  all.insert(all.end(), data.test.begin(), data.test.end());
  print_summary(summarize(data.corpus, all), "");
  std::printf("synthetic dataset written to %s\n", out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// prepare
// ---------------------------------------------------------------------------

int cmd_prepare(const CommonArgs& common) {
  RunConfig cfg = load_config(common);
  const fs::path dir = run_dir(cfg);
  fs::create_directories(dir);

  const std::string news_path = cfg.resolve_path("data.news");
  const std::string train_path = cfg.resolve_path("data.behaviors_train");
  if (news_path.empty() || train_path.empty()) {
    throw ConfigError("data.news and data.behaviors_train must be set");
  }
  for (const std::string& p : {news_path, train_path}) {
    if (!fs::exists(p)) throw IoError("missing input file: " + p);
  }
  for (const char* name : {"config.resolved.txt", "vocab.txt", "corpus.cache",
                           "imps.train.cache", "imps.valid.cache",
                           "imps.test.cache"}) {
    ensure_fresh(dir / name, common.force);
  }

  ParseStats news_stats;
  Corpus corpus = parse_news_tsv(news_path, &news_stats);
  corpus.vocab = build_vocab(corpus, cfg.u64("vocab.min_count"));
  tokenize_corpus(corpus, cfg.u64("model.title_len"));

  ParseStats beh_stats;
  std::vector<ImpressionLog> train =
      parse_behaviors_tsv(train_path, corpus, &beh_stats);
  std::vector<ImpressionLog> valid, test;
  const std::string valid_path = cfg.resolve_path("data.behaviors_valid");
  if (!valid_path.empty()) {
    valid = parse_behaviors_tsv(valid_path, corpus, &beh_stats);
  } else {
    // Fractional split: the last share of training impressions by time.
    const double frac = cfg.f64("data.valid_fraction");
    const auto keep = static_cast<std::size_t>(
        static_cast<double>(train.size()) * (1.0 - frac) + 0.5);
    valid.assign(train.begin() + static_cast<std::ptrdiff_t>(keep), train.end());
    train.resize(keep);
  }
  const std::string test_path = cfg.resolve_path("data.behaviors_test");
  if (!test_path.empty()) {
    test = parse_behaviors_tsv(test_path, corpus, &beh_stats);
  }

  {
    std::ofstream out(dir / "config.resolved.txt");
    out << cfg.canonical();
  }
  {
    std::ofstream out(dir / "vocab.txt");
    for (const std::string& w : corpus.vocab.id_to_word) out << w << "\n";
  }
  save_corpus_cache(corpus, (dir / "corpus.cache").string());
  save_impressions_cache(train, (dir / "imps.train.cache").string());
  save_impressions_cache(valid, (dir / "imps.valid.cache").string());
  save_impressions_cache(test, (dir / "imps.test.cache").string());

  std::vector<ImpressionLog> all = train;
  all.insert(all.end(), valid.begin(), valid.end());
  all.insert(all.end(), test.begin(), test.end());
  char note[160];
  std::snprintf(note, sizeof(note),
                "splits: train %zu / valid %zu / test %zu impressions; "
                "skipped rows %zu, dropped refs %zu",
                train.size(), valid.size(), test.size(),
                news_stats.skipped_rows + beh_stats.skipped_rows,
                beh_stats.dropped_refs);
  print_summary(summarize(corpus, all), note);
  std::printf("vocab size %zu written to %s\n", corpus.vocab.size(),
              (dir / "vocab.txt").string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

void write_log(const fs::path& path, const std::vector<EpochStats>& history,
               const char* stage, const char* metric) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write log: " + path.string());
  for (const EpochStats& s : history) {
    out << epoch_line(stage, s, metric) << "\n";
  }
}

int cmd_train(const CommonArgs& common, const std::string& stage) {
  if (stage != "1" && stage != "2" && stage != "both") {
    throw UsageError("--stage must be 1, 2 or both");
  }
  RunConfig cfg = load_config(common);
  const fs::path dir = run_dir(cfg);
  PreparedData data = load_prepared(cfg);
  TrainConfig tcfg = cfg.train_config();
  ModelConfig mcfg = cfg.model_config();

  Checkpoint stage1_ckpt;
  bool have_stage1 = false;
  if (stage == "1" || stage == "both") {
    ensure_fresh(dir / "checkpoint.stage1.bin", common.force);
    Stage1Result r =
        train_stage1(data.corpus, data.train, data.valid, mcfg, tcfg);
    std::vector<std::string> lines;
    for (const EpochStats& s : r.history) {
      lines.push_back(epoch_line("1", s, "val_auc"));
      std::printf("%s (%.1fs)\n", lines.back().c_str(), s.seconds);
    }
    stage1_ckpt = make_stage1_checkpoint(r.model, lines);
    save_checkpoint(stage1_ckpt, (dir / "checkpoint.stage1.bin").string());
    write_log(dir / "train_log.stage1.txt", r.history, "1", "val_auc");
    std::printf("stage 1 best val_auc %.4f (epoch %zu) -> %s\n",
                r.best_valid_auc, r.best_epoch,
                (dir / "checkpoint.stage1.bin").string().c_str());
    have_stage1 = true;
  }
  if (stage == "2" || stage == "both") {
    if (!have_stage1) {
      const fs::path s1 = dir / "checkpoint.stage1.bin";
      if (!fs::exists(s1)) {
        throw UsageError("stage 2 needs " + s1.string() + "; train stage 1 first");
      }
      stage1_ckpt = load_checkpoint(s1.string());
      verify_compatible(stage1_ckpt, stage1_ckpt.model.cfg);
    }
    ensure_fresh(dir / "checkpoint.stage2.bin", common.force);
    Stage2Result r = train_stage2(stage1_ckpt.model, data.corpus, data.train,
                                  data.valid, tcfg);
    std::vector<std::string> lines = stage1_ckpt.history;
    for (const EpochStats& s : r.history) {
      lines.push_back(epoch_line("2", s, "val_recall"));
      std::printf("%s (%.1fs)\n", lines.back().c_str(), s.seconds);
    }
    Checkpoint ckpt = make_stage2_checkpoint(stage1_ckpt.model, r.memory, lines);
    save_checkpoint(ckpt, (dir / "checkpoint.stage2.bin").string());
    write_log(dir / "train_log.stage2.txt", r.history, "2", "val_recall");
    std::printf("stage 2 best val_recall@%zu %.4f (epoch %zu) -> %s\n",
                tcfg.early_stop_recall_k, r.best_valid_recall, r.best_epoch,
                (dir / "checkpoint.stage2.bin").string().c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

void finish_report(MetricsReport& report, const RunConfig& cfg,
                   const PreparedData& data, const Checkpoint& ckpt) {
  report.config_hash = ckpt.config_hash;
  report.seed = cfg.u64("seed");
  report.dataset_id = data.dataset_id;
}

void emit_report(const MetricsReport& report, const fs::path& dir,
                 const std::string& basename, bool force) {
  ensure_fresh(dir / (basename + ".json"), force);
  ensure_fresh(dir / (basename + ".csv"), force);
  write_report_json(report, (dir / (basename + ".json")).string());
  write_report_csv(report, (dir / (basename + ".csv")).string());
  for (const std::string& name : report.metric_names) {
    std::printf("%-12s %-12s %-10s %.6f +/- %.6f\n", report.task.c_str(),
                report.label.c_str(), name.c_str(), report.mean(name),
                report.stddev(name));
  }
  std::printf("report -> %s.{json,csv} (%.1fs)\n",
              (dir / basename).string().c_str(), report.wall_seconds);
}

int cmd_eval(const CommonArgs& common, std::string checkpoint_path,
             const std::string& task, const std::string& mode, bool baseline,
             const std::string& k_override) {
  if (task != "rank" && task != "recall" && task != "both") {
    throw UsageError("--task must be rank, recall or both");
  }
  if (mode != "all" && mode != "top") {
    throw UsageError("--mode must be all or top");
  }
  RunConfig cfg = load_config(common);
  if (!k_override.empty()) cfg.set("eval.k_list", k_override);
  const fs::path dir = run_dir(cfg);
  PreparedData data = load_prepared(cfg);

  if (checkpoint_path.empty()) {
    const fs::path s2 = dir / "checkpoint.stage2.bin";
    const fs::path s1 = dir / "checkpoint.stage1.bin";
    checkpoint_path = fs::exists(s2) ? s2.string()
                      : fs::exists(s1) ? s1.string()
                                       : "";
    if (checkpoint_path.empty()) {
      throw UsageError("no checkpoint in " + dir.string() + "; train first");
    }
  }
  Checkpoint ckpt = load_checkpoint(checkpoint_path);

  if (task == "rank" || task == "both") {
    if (data.test.empty()) throw ConfigError("eval rank: empty test split");
    MetricsReport report = evaluate_ranking(ckpt.model, data.corpus, data.test);
    finish_report(report, cfg, data, ckpt);
    emit_report(report, dir, "report_rank", common.force);
    std::printf("reference (reported full-scale MIND, different data scale, "
                "not comparable): AUC 68.41  MRR 33.50  nDCG@5 36.47  "
                "nDCG@10 42.26\n");
  }
  if (task == "recall" || task == "both") {
    if (data.test.empty()) throw ConfigError("eval recall: empty test split");
    const std::vector<std::size_t> ks = cfg.size_list("eval.k_list");
    if (baseline) {
      MetricsReport report =
          evaluate_recall(ckpt.model, nullptr, data.corpus, data.train,
                          data.test, ks, RecallMode::kAveragePool, 1);
      finish_report(report, cfg, data, ckpt);
      emit_report(report, dir, "report_recall_avgpool", common.force);
    } else {
      if (ckpt.memory_count == 0) {
        throw CompatibilityError(
            "recall eval needs a stage-2 checkpoint (or --baseline)");
      }
      const RecallMode rmode =
          mode == "all" ? RecallMode::kAll : RecallMode::kTop;
      MetricsReport report = evaluate_recall(
          ckpt.model, &ckpt.memory, data.corpus, data.train, data.test, ks,
          rmode, cfg.u64("train.p"));
      finish_report(report, cfg, data, ckpt);
      emit_report(report, dir, std::string("report_recall_") + mode,
                  common.force);
      std::printf("reference (reported full-scale MIND, not comparable): "
                  "R@100 1.516%% for the top-P variant\n");
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

int cmd_sweep(const CommonArgs& common, const std::string& parameter,
              const std::string& values_csv) {
  if (parameter != "M" && parameter != "P") {
    throw UsageError("--parameter must be M or P");
  }
  RunConfig cfg = load_config(common);
  const fs::path dir = run_dir(cfg);
  PreparedData data = load_prepared(cfg);
  TrainConfig tcfg = cfg.train_config();
  const std::vector<std::size_t> ks = cfg.size_list("eval.k_list");

  std::vector<std::size_t> values;
  {
    RunConfig tmp;
    tmp.set("eval.k_list", values_csv.empty() ? "5,10,20" : values_csv);
    values = tmp.size_list("eval.k_list");
  }

  const fs::path csv_path =
      dir / (parameter == "M" ? "sweep_m.csv" : "sweep_p.csv");
  ensure_fresh(csv_path, common.force);
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  csv << "parameter,value,k,recall\n";

  if (parameter == "M") {
    const fs::path s1 = dir / "checkpoint.stage1.bin";
    if (!fs::exists(s1)) {
      throw UsageError("M sweep needs " + s1.string() + "; train stage 1 first");
    }
    Checkpoint ckpt = load_checkpoint(s1.string());
    for (std::size_t m : values) {
      TrainConfig t = tcfg;
      t.basis_count = m;
      t.top_p = m;  // tune M with P = M
      Stage2Result r =
          train_stage2(ckpt.model, data.corpus, data.train, data.valid, t);
      MetricsReport report =
          evaluate_recall(ckpt.model, &r.memory, data.corpus, data.train,
                          data.test, ks, RecallMode::kTop, m);
      for (std::size_t k : ks) {
        csv << "M," << m << ',' << k << ','
            << report.mean("recall@" + std::to_string(k)) << "\n";
      }
      std::printf("sweep M=%zu done (best val recall %.4f)\n", m,
                  r.best_valid_recall);
    }
  } else {
    const fs::path s2 = dir / "checkpoint.stage2.bin";
    if (!fs::exists(s2)) {
      throw UsageError("P sweep needs " + s2.string() + "; train stage 2 first");
    }
    Checkpoint ckpt = load_checkpoint(s2.string());
    for (std::size_t p : values) {
      if (p > ckpt.memory_count) {
        std::fprintf(stderr, "warning: skipping P=%zu > M=%zu\n", p,
                     ckpt.memory_count);
        continue;
      }
      MetricsReport report =
          evaluate_recall(ckpt.model, &ckpt.memory, data.corpus, data.train,
                          data.test, ks, RecallMode::kTop, p);
      for (std::size_t k : ks) {
        csv << "P," << p << ',' << k << ','
            << report.mean("recall@" + std::to_string(k)) << "\n";
      }
      std::printf("sweep P=%zu done\n", p);
    }
  }
  std::printf("sweep -> %s\n", csv_path.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

int cmd_bench(const CommonArgs& common, std::string checkpoint_path,
              std::size_t reps_override) {
  RunConfig cfg = load_config(common);
  const fs::path dir = run_dir(cfg);
  fs::create_directories(dir);
  std::size_t reps = reps_override ? reps_override : cfg.u64("bench.reps");
  if (reps == 1) {
    std::fprintf(stderr, "warning: reps=1 gives unstable medians; use >= 30\n");
  }
  RankingModel model;
  if (!checkpoint_path.empty() ||
      fs::exists(dir / "checkpoint.stage2.bin") ||
      fs::exists(dir / "checkpoint.stage1.bin")) {
    if (checkpoint_path.empty()) {
      checkpoint_path = fs::exists(dir / "checkpoint.stage2.bin")
                            ? (dir / "checkpoint.stage2.bin").string()
                            : (dir / "checkpoint.stage1.bin").string();
    }
    model = load_checkpoint(checkpoint_path).model;
  } else {
    // No checkpoint: a freshly initialized model times identically.
    ModelConfig mcfg = cfg.model_config();
    mcfg.vocab_size = 1000;
    Rng rng(cfg.u64("seed"));
    model = RankingModel::init(mcfg, rng);
  }

  const std::vector<std::size_t> n_values = cfg.size_list("bench.n_values");
  const std::vector<std::size_t> m_values = cfg.size_list("bench.m_values");
  std::vector<BenchRow> rows = bench_recall_embedding(
      model, n_values, m_values, reps, cfg.u64("seed"));
  ensure_fresh(dir / "bench.csv", common.force);
  write_bench_csv(rows, (dir / "bench.csv").string());

  BenchVerdict verdict = judge_bench(rows, n_values, m_values);
  std::printf("memory_compose N-ratio %.3f (N-independent: %s)\n",
              verdict.compose_n_ratio,
              verdict.compose_n_independent ? "yes" : "no");
  std::printf("user_encode monotone in N: %s; compose monotone in M: %s\n",
              verdict.user_encode_monotone ? "yes" : "no",
              verdict.compose_m_monotone ? "yes" : "no");
  std::printf("bench -> %s\n", (dir / "bench.csv").string().c_str());
  if (!verdict.compose_n_independent) {
    throw NumericError("memory_compose time varies with N beyond [0.5, 2.0]");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unified recall/ranking news recommendation engine"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonArgs common;
  app.add_option("--config", common.config_path, "key=value config file");
  app.add_option("--set", common.overrides, "override: key=value (repeatable)");
  app.add_option("--run-dir", common.run_dir_override, "run directory override");
  app.add_flag("--force", common.force, "overwrite existing artifacts");

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory (default <run.dir>/data)");

  auto* prepare = app.add_subcommand("prepare", "parse, tokenize and cache a dataset");

  auto* train = app.add_subcommand("train", "train stage 1, stage 2 or both");
  std::string stage = "both";
  train->add_option("--stage", stage, "1, 2 or both")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ckpt_path, task = "both", mode = "top", k_override;
  bool baseline = false;
  eval->add_option("--checkpoint", ckpt_path, "checkpoint file");
  eval->add_option("--task", task, "rank, recall or both")->capture_default_str();
  eval->add_option("--mode", mode, "recall composition: all or top")
      ->capture_default_str();
  eval->add_flag("--baseline", baseline, "average-pooling recall baseline");
  eval->add_option("--k", k_override, "comma-separated recall K list");

  auto* sweep = app.add_subcommand("sweep", "hyperparameter sweep over M or P");
  std::string parameter, values_csv;
  sweep->add_option("--parameter", parameter, "M or P")->required();
  sweep->add_option("--values", values_csv, "comma-separated values")->required();

  auto* bench = app.add_subcommand("bench", "time user encoding vs memory composition");
  std::string bench_ckpt;
  std::size_t bench_reps = 0;
  bench->add_option("--checkpoint", bench_ckpt, "checkpoint file");
  bench->add_option("--reps", bench_reps, "repetitions per grid point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(common, synth_out);
    if (prepare->parsed()) return cmd_prepare(common);
    if (train->parsed()) return cmd_train(common, stage);
    if (eval->parsed()) {
      return cmd_eval(common, ckpt_path, task, mode, baseline, k_override);
    }
    if (sweep->parsed()) return cmd_sweep(common, parameter, values_csv);
    if (bench->parsed()) return cmd_bench(common, bench_ckpt, bench_reps);
    throw UsageError("no subcommand");
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 4;
  } catch (const CompatibilityError& e) {
    std::fprintf(stderr, "compatibility error: %s\n", e.what());
    return 6;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 5;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 5;
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 5;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
