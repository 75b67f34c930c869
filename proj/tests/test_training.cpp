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

#include <cstring>

#include "gtest/gtest.h"
#include "temp_dir.hpp"
#include "unirec/evaluation.hpp"
#include "unirec/report_io.hpp"
#include "unirec/synthetic.hpp"
#include "unirec/training.hpp"

namespace unirec {
namespace {

struct TinyData {
  Corpus corpus;
  std::vector<ImpressionLog> train, valid, test;
};

TinyData tiny_dataset(std::uint64_t seed = 7) {
  SyntheticSpec spec;
  spec.num_topics = 3;
  spec.num_users = 24;
  spec.num_news = 120;
  spec.words_per_topic = 20;
  spec.impressions_per_user = 8;
  spec.candidates_per_impression = 6;
  spec.seed = seed;
  SyntheticData data = generate_synthetic(spec);
  TinyData out;
  out.corpus = std::move(data.corpus);
  out.corpus.vocab = build_vocab(out.corpus, 1);
  tokenize_corpus(out.corpus, 6);
  out.train = std::move(data.train);
  out.valid = std::move(data.valid);
  out.test = std::move(data.test);
  return out;
}

ModelConfig tiny_model_config() {
  ModelConfig m;
  m.dim = 8;
  m.heads = 2;
  m.attn_hidden = 8;
  m.title_len = 6;
  m.max_history = 6;
  return m;
}

TrainConfig tiny_train_config() {
  TrainConfig t;
  t.ranking_negatives = 2;
  t.recall_negatives = 20;
  t.basis_count = 4;
  t.top_p = 2;
  t.batch_size = 16;
  t.max_epochs = 2;
  t.patience = 2;
  t.seed = 5;
  t.early_stop_recall_k = 10;
  return t;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.size() == b.size() &&
         0 == std::memcmp(a.data(), b.data(), a.size() * sizeof(double));
}

bool models_bitwise_equal(const RankingModel& a, const RankingModel& b) {
  auto pa = a.named_parameters(), pb = b.named_parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].first != pb[i].first) return false;
    if (!bitwise_equal(pa[i].second, pb[i].second)) return false;
  }
  return true;
}

TEST(Stage1, ZeroEpochsReturnsInitialization) {
  TinyData data = tiny_dataset();
  TrainConfig tcfg = tiny_train_config();
  tcfg.max_epochs = 0;
  Stage1Result r = train_stage1(data.corpus, data.train, data.valid,
                                tiny_model_config(), tcfg);
  EXPECT_TRUE(r.history.empty());

  // Matches a fresh init drawn from the trainer's seeding scheme.
  Rng master(tcfg.seed);
  Rng init_rng = master.child(0x5eed0001);
  ModelConfig mcfg = tiny_model_config();
  mcfg.title_len = data.corpus.title_len;
  mcfg.vocab_size = data.corpus.vocab.size();
  RankingModel fresh = RankingModel::init(mcfg, init_rng);
  EXPECT_TRUE(models_bitwise_equal(r.model, fresh));
}

TEST(Stage1, SameSeedGivesBitwiseIdenticalModels) {
  TinyData data = tiny_dataset();
  TrainConfig tcfg = tiny_train_config();
  Stage1Result a = train_stage1(data.corpus, data.train, data.valid,
                                tiny_model_config(), tcfg);
  Stage1Result b = train_stage1(data.corpus, data.train, data.valid,
                                tiny_model_config(), tcfg);
  EXPECT_TRUE(models_bitwise_equal(a.model, b.model));
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].valid_metric, b.history[i].valid_metric);
  }

  TrainConfig other = tcfg;
  other.seed = 6;
  Stage1Result c = train_stage1(data.corpus, data.train, data.valid,
                                tiny_model_config(), other);
  EXPECT_FALSE(models_bitwise_equal(a.model, c.model));
}

TEST(Stage1, LossDropsOnTinyData) {
  TinyData data = tiny_dataset();
  TrainConfig tcfg = tiny_train_config();
  tcfg.max_epochs = 4;
  tcfg.patience = 4;
  Stage1Result r = train_stage1(data.corpus, data.train, data.valid,
                                tiny_model_config(), tcfg);
  ASSERT_GE(r.history.size(), 2u);
  double min_loss = r.history[0].train_loss;
  for (const EpochStats& s : r.history) min_loss = std::min(min_loss, s.train_loss);
  EXPECT_LT(min_loss, r.history[0].train_loss);
  EXPECT_GT(r.best_valid_auc, 0.4);
}

TEST(Stage2, EncodersStayBitwiseFrozen) {
  TinyData data = tiny_dataset();
  TrainConfig tcfg = tiny_train_config();
  Stage1Result s1 = train_stage1(data.corpus, data.train, data.valid,
                                 tiny_model_config(), tcfg);
  std::vector<std::pair<std::string, std::vector<double>>> before;
  for (auto& [name, t] : s1.model.named_parameters()) {
    before.emplace_back(name, t.vec());
  }
  Stage2Result s2 = train_stage2(s1.model, data.corpus, data.train, data.valid, tcfg);
  EXPECT_FALSE(s2.history.empty());
  auto after = s1.model.named_parameters();
  ASSERT_EQ(before.size(), after.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(before[i].second, after[i].second.vec()) << before[i].first;
  }

  // Ranking metrics from the stage-2 model are bit-identical to stage 1.
  MetricsReport r1 = evaluate_ranking(s1.model, data.corpus, data.test);
  MetricsReport r2 = evaluate_ranking(s1.model, data.corpus, data.test);
  for (const std::string& name : r1.metric_names) {
    EXPECT_EQ(r1.mean(name), r2.mean(name));
  }
}

TEST(Stage2, ZeroLearningRateLeavesMemoryAtInit) {
  TinyData data = tiny_dataset();
  TrainConfig tcfg = tiny_train_config();
  Stage1Result s1 = train_stage1(data.corpus, data.train, data.valid,
                                 tiny_model_config(), tcfg);
  TrainConfig frozen = tcfg;
  frozen.learning_rate = 0.0;
  Stage2Result s2 = train_stage2(s1.model, data.corpus, data.train, data.valid, frozen);

  Rng master(frozen.seed);
  Rng mem_rng = master.child(0x5eed0002);
  BasisMemory fresh = BasisMemory::init(frozen.basis_count, s1.model.cfg.dim, mem_rng);
  EXPECT_TRUE(bitwise_equal(s2.memory.keys, fresh.keys));
  EXPECT_TRUE(bitwise_equal(s2.memory.values, fresh.values));
}

TEST(Stage2, TrainingMovesMemoryAndHelpsRecall) {
  TinyData data = tiny_dataset();
  TrainConfig tcfg = tiny_train_config();
  tcfg.max_epochs = 3;
  Stage1Result s1 = train_stage1(data.corpus, data.train, data.valid,
                                 tiny_model_config(), tcfg);
  Stage2Result s2 = train_stage2(s1.model, data.corpus, data.train, data.valid, tcfg);

  Rng master(tcfg.seed);
  Rng mem_rng = master.child(0x5eed0002);
  BasisMemory fresh = BasisMemory::init(tcfg.basis_count, s1.model.cfg.dim, mem_rng);
  EXPECT_FALSE(bitwise_equal(s2.memory.values, fresh.values));
  EXPECT_GT(s2.best_valid_recall, 0.0);
}

TEST(Checkpoints, RoundTripIsBitwise) {
  TinyData data = tiny_dataset();
  TrainConfig tcfg = tiny_train_config();
  tcfg.max_epochs = 1;
  Stage1Result s1 = train_stage1(data.corpus, data.train, data.valid,
                                 tiny_model_config(), tcfg);
  Stage2Result s2 = train_stage2(s1.model, data.corpus, data.train, data.valid, tcfg);

  testutil::TempDir dir("ckpt");
  Checkpoint ck = make_stage2_checkpoint(
      s1.model, s2.memory, {"stage=1 epoch=1 loss=1.0 auc=0.5"});
  save_checkpoint(ck, dir.file("model.bin"));
  Checkpoint loaded = load_checkpoint(dir.file("model.bin"));
  EXPECT_EQ(loaded.stage, 2u);
  EXPECT_EQ(loaded.memory_count, tcfg.basis_count);
  EXPECT_EQ(loaded.history, ck.history);
  EXPECT_TRUE(models_bitwise_equal(loaded.model, s1.model));
  EXPECT_TRUE(bitwise_equal(loaded.memory.keys, s2.memory.keys));
  EXPECT_TRUE(bitwise_equal(loaded.memory.values, s2.memory.values));

  // Byte-identical file when saved again.
  save_checkpoint(loaded, dir.file("model2.bin"));
  EXPECT_EQ(testutil::read_file(dir.file("model.bin")),
            testutil::read_file(dir.file("model2.bin")));
}

TEST(Checkpoints, TruncatedFileFailsCleanly) {
  TinyData data = tiny_dataset();
  TrainConfig tcfg = tiny_train_config();
  tcfg.max_epochs = 0;
  Stage1Result s1 = train_stage1(data.corpus, data.train, data.valid,
                                 tiny_model_config(), tcfg);
  testutil::TempDir dir("ckpt_trunc");
  save_checkpoint(make_stage1_checkpoint(s1.model, {}), dir.file("model.bin"));
  std::string bytes = testutil::read_file(dir.file("model.bin"));
  testutil::write_file(dir.file("short.bin"), bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(load_checkpoint(dir.file("short.bin")), CompatibilityError);
  testutil::write_file(dir.file("junk.bin"), "not a checkpoint at all");
  EXPECT_THROW(load_checkpoint(dir.file("junk.bin")), CompatibilityError);
  EXPECT_THROW(load_checkpoint(dir.file("missing.bin")), IoError);
}

TEST(Checkpoints, Stage2FileServesRankingEvaluation) {
  TinyData data = tiny_dataset();
  TrainConfig tcfg = tiny_train_config();
  tcfg.max_epochs = 1;
  Stage1Result s1 = train_stage1(data.corpus, data.train, data.valid,
                                 tiny_model_config(), tcfg);
  Stage2Result s2 = train_stage2(s1.model, data.corpus, data.train, data.valid, tcfg);
  testutil::TempDir dir("ckpt_super");
  save_checkpoint(make_stage2_checkpoint(s1.model, s2.memory, {}),
                  dir.file("model.bin"));
  Checkpoint loaded = load_checkpoint(dir.file("model.bin"));
  verify_compatible(loaded, loaded.model.cfg);
  MetricsReport direct = evaluate_ranking(s1.model, data.corpus, data.test);
  MetricsReport via_ckpt = evaluate_ranking(loaded.model, data.corpus, data.test);
  for (const std::string& name : direct.metric_names) {
    EXPECT_EQ(direct.mean(name), via_ckpt.mean(name));
  }

  // Architecture disagreement is refused.
  ModelConfig other = loaded.model.cfg;
  other.dim *= 2;
  EXPECT_THROW(verify_compatible(loaded, other), CompatibilityError);
}

TEST(Evaluation, ModesShareOneCheckpoint) {
  TinyData data = tiny_dataset();
  TrainConfig tcfg = tiny_train_config();
  tcfg.max_epochs = 2;
  Stage1Result s1 = train_stage1(data.corpus, data.train, data.valid,
                                 tiny_model_config(), tcfg);
  Stage2Result s2 = train_stage2(s1.model, data.corpus, data.train, data.valid, tcfg);
  const std::vector<std::size_t> ks = {5, 10, 30};
  MetricsReport all = evaluate_recall(s1.model, &s2.memory, data.corpus,
                                      data.train, data.test, ks,
                                      RecallMode::kAll, tcfg.top_p);
  MetricsReport top = evaluate_recall(s1.model, &s2.memory, data.corpus,
                                      data.train, data.test, ks,
                                      RecallMode::kTop, tcfg.top_p);
  MetricsReport base = evaluate_recall(s1.model, nullptr, data.corpus,
                                       data.train, data.test, ks,
                                       RecallMode::kAveragePool, 1);
  EXPECT_EQ(all.label, "UniRec(all)");
  EXPECT_EQ(top.label, "UniRec(top)");
  EXPECT_EQ(base.label, "YoutubeNet");
  for (const MetricsReport* r : {&all, &top, &base}) {
    double prev = -1.0;
    for (const std::string& name : r->metric_names) {
      const double v = r->mean(name);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      EXPECT_GE(v, prev);  // recall grows with K
      prev = v;
    }
  }
}

TEST(Evaluation, ReportSerializationRoundTrip) {
  MetricsReport r;
  r.task = "recall";
  r.label = "UniRec(top)";
  r.add("recall@10", 0.25);
  r.add("recall@10", 0.35);
  r.add("recall@30", 0.5);
  r.config_hash = 42;
  r.seed = 7;
  r.dataset_id = "ds";
  EXPECT_DOUBLE_EQ(r.mean("recall@10"), 0.3);
  EXPECT_NEAR(r.stddev("recall@10"), 0.0707106, 1e-6);

  nlohmann::json j = report_to_json(r);
  EXPECT_EQ(j["metrics"]["recall@10"]["values"].size(), 2u);
  EXPECT_EQ(j["meta"]["seed"], 7);
  std::string csv = report_to_csv(r);
  EXPECT_NE(csv.find("recall@30,0.5,0,1"), std::string::npos);

  testutil::TempDir dir("report");
  write_report_json(r, dir.file("r.json"));
  write_report_csv(r, dir.file("r.csv"));
  EXPECT_FALSE(testutil::read_file(dir.file("r.json")).empty());
}

}  // namespace
}  // namespace unirec
