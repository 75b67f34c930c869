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
#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <unordered_map>
#include <vector>

#include "unirec/adam.hpp"
#include "unirec/checkpoint.hpp"
#include "unirec/losses.hpp"
#include "unirec/metrics.hpp"
#include "unirec/model.hpp"
#include "unirec/sampling.hpp"

namespace unirec {

// Two-stage schedule: stage 1 fits the ranking towers on in-impression
// negatives; stage 2 freezes them and fits the basis memory on corpus-wide
// negatives.

struct TrainConfig {
  std::size_t ranking_negatives = 4;   // K
  std::size_t recall_negatives = 200;  // T
  std::size_t basis_count = 20;        // M
  std::size_t top_p = 5;               // P, test-phase only
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 10;
  std::size_t patience = 2;  // epochs without improvement before stopping
  double plateau_decay = 1.0;  // lr multiplier after a non-improving epoch
  std::uint64_t seed = 42;

  std::size_t steps_per_epoch = 0;        // 0 = one full pass over samples
  std::size_t stage2_max_epochs = 0;      // 0 = max_epochs
  std::size_t stage2_steps_per_epoch = 0; // 0 = one full pass
  double stage2_lr = 0.0;                 // 0 = learning_rate
  std::size_t valid_max_impressions = 0;  // 0 = all
  std::size_t early_stop_recall_k = 100;
  bool freeze_user_encoder = true;
  bool resample_each_epoch = true;

  void validate() const {
    if (ranking_negatives < 1 || recall_negatives < 1) {
      throw ConfigError("train: K and T must be >= 1");
    }
    if (basis_count < 1 || top_p < 1 || top_p > basis_count) {
      throw ConfigError("train: need 1 <= P <= M");
    }
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  }
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_metric = 0.0;
  double seconds = 0.0;
};

inline std::string epoch_line(const char* stage, const EpochStats& s,
                              const char* metric_name) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "stage=%s epoch=%zu loss=%.6f %s=%.6f",
                stage, s.epoch, s.train_loss, metric_name, s.valid_metric);
  return buf;
}

namespace traindetail {

inline std::vector<std::vector<double>> snapshot(const std::vector<Tensor>& ps) {
  std::vector<std::vector<double>> out;
  out.reserve(ps.size());
  for (const Tensor& p : ps) out.push_back(p.vec());
  return out;
}

inline void restore(std::vector<Tensor>& ps,
                    const std::vector<std::vector<double>>& snap) {
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i].vec() = snap[i];
}

inline double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace traindetail

// Mean per-impression AUC of the current model over a validation slice.
inline double validation_auc(const RankingModel& m, const Corpus& corpus,
                             const std::vector<ImpressionLog>& valid,
                             std::size_t max_impressions = 0) {
  if (valid.empty()) return std::nan("");
  NoGradGuard ng;
  Tensor pool = encode_news_pool(m, corpus);
  const std::size_t limit =
      max_impressions ? std::min(max_impressions, valid.size()) : valid.size();
  double acc = 0.0;
  std::size_t counted = 0;
  std::vector<double> scores;
  std::vector<int> labels;
  for (std::size_t i = 0; i < limit; ++i) {
    const ImpressionLog& log = valid[i];
    Tensor hist = history_matrix(pool, log.history, m.cfg.max_history);
    Tensor u = encode_user_rank(m, hist);
    scores.clear();
    labels.clear();
    for (const Candidate& c : log.candidates) {
      const double* r = pool.data() + static_cast<std::size_t>(c.news) * m.cfg.dim;
      double s = 0.0;
      for (std::size_t t = 0; t < m.cfg.dim; ++t) s += u(t) * r[t];
      scores.push_back(s);
      labels.push_back(c.label);
    }
    if (auto a = auc(scores, labels)) {
      acc += *a;
      ++counted;
    }
  }
  return counted ? acc / static_cast<double>(counted) : std::nan("");
}

struct Stage1Result {
  RankingModel model;
  std::vector<EpochStats> history;
  double best_valid_auc = std::nan("");
  std::size_t best_epoch = 0;
};

inline Stage1Result train_stage1(const Corpus& corpus,
                                 const std::vector<ImpressionLog>& train,
                                 const std::vector<ImpressionLog>& valid,
                                 ModelConfig mcfg, const TrainConfig& tcfg) {
  tcfg.validate();
  if (corpus.title_len == 0) {
    throw ConfigError("train_stage1: corpus is not tokenized");
  }
  mcfg.title_len = corpus.title_len;
  mcfg.vocab_size = corpus.vocab.size();
  Rng master(tcfg.seed);
  Rng init_rng = master.child(0x5eed0001);
  Stage1Result result;
  result.model = RankingModel::init(mcfg, init_rng);
  RankingModel& model = result.model;

  std::vector<Tensor> params = model.parameters();
  Adam opt(params, {tcfg.learning_rate});

  const std::size_t k = tcfg.ranking_negatives;
  double best = -1.0;
  std::size_t since_best = 0;
  std::vector<std::vector<double>> best_snap;

  std::vector<std::size_t> slot_of_news;  // dense map, corpus index -> slot+1
  slot_of_news.assign(corpus.size(), 0);

  for (std::size_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    const double t0 = traindetail::now_seconds();
    Rng epoch_rng = master.child(0xa000 + (tcfg.resample_each_epoch ? epoch : 1));
    std::vector<RankingSample> samples = sample_ranking_batch(train, k, epoch_rng);
    if (samples.empty()) {
      throw ConfigError("train_stage1: no usable training samples");
    }
    epoch_rng.shuffle(samples);
    const std::size_t max_steps =
        tcfg.steps_per_epoch
            ? std::min(tcfg.steps_per_epoch,
                       (samples.size() + tcfg.batch_size - 1) / tcfg.batch_size)
            : (samples.size() + tcfg.batch_size - 1) / tcfg.batch_size;

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    std::vector<std::size_t> touched;
    std::vector<const std::vector<int>*> titles;
    std::vector<std::size_t> hist_slots, cand_slots;
    for (std::size_t step = 0; step < max_steps; ++step) {
      const std::size_t lo = step * tcfg.batch_size;
      const std::size_t hi = std::min(samples.size(), lo + tcfg.batch_size);
      if (lo >= hi) break;

      // Encode each distinct news item in the batch once.
      touched.clear();
      titles.clear();
      auto slot = [&](int news) {
        auto idx = static_cast<std::size_t>(news);
        if (slot_of_news[idx] == 0) {
          titles.push_back(&corpus.articles[idx].title_tokens);
          touched.push_back(idx);
          slot_of_news[idx] = titles.size();  // slot + 1
        }
        return slot_of_news[idx] - 1;
      };
      struct Prepared {
        std::vector<std::size_t> hist;
        std::vector<std::size_t> cands;  // positive first
      };
      std::vector<Prepared> prepared;
      prepared.reserve(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) {
        const RankingSample& s = samples[i];
        Prepared p;
        const std::size_t n = std::min(s.history.size(), mcfg.max_history);
        const std::size_t start = s.history.size() - n;
        for (std::size_t j = 0; j < n; ++j) p.hist.push_back(slot(s.history[start + j]));
        p.cands.push_back(slot(s.positive));
        for (int neg : s.negatives) p.cands.push_back(slot(neg));
        prepared.push_back(std::move(p));
      }
      Tensor embs = encode_news_batch(model, titles);
      std::vector<Tensor> losses;
      losses.reserve(prepared.size());
      for (const Prepared& p : prepared) {
        Tensor u = p.hist.empty()
                       ? encode_user_rank(model, Tensor())
                       : encode_user_rank(model, gather_rows(embs, p.hist));
        Tensor cand = gather_rows(embs, p.cands);
        losses.push_back(contrastive_loss(matvec(cand, u)));
      }
      Tensor batch_loss = scale(sum(stack_scalars(losses)),
                                1.0 / static_cast<double>(losses.size()));
      opt.zero_grad();
      backward(batch_loss);
      opt.step();
      loss_sum += batch_loss.value() * static_cast<double>(losses.size());
      loss_count += losses.size();
      for (std::size_t idx : touched) slot_of_news[idx] = 0;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    stats.valid_metric =
        validation_auc(model, corpus, valid, tcfg.valid_max_impressions);
    stats.seconds = traindetail::now_seconds() - t0;
    result.history.push_back(stats);

    if (!std::isnan(stats.valid_metric)) {
      if (stats.valid_metric > best) {
        best = stats.valid_metric;
        result.best_valid_auc = best;
        result.best_epoch = epoch;
        best_snap = traindetail::snapshot(params);
        since_best = 0;
      } else {
        ++since_best;
        if (tcfg.plateau_decay < 1.0 && since_best % 2 == 0) {
          opt.set_lr(opt.config().lr * tcfg.plateau_decay);
        }
        if (since_best >= tcfg.patience) break;
      }
    }
  }
  if (!best_snap.empty()) traindetail::restore(params, best_snap);
  return result;
}

// ---------------------------------------------------------------------------
// Stage 2
// ---------------------------------------------------------------------------

// Per-user recall state shared by training and evaluation.
struct RecallEvalSet {
  std::vector<std::size_t> user_index;                 // into train profiles
  std::vector<std::unordered_set<int>> test_clicked;   // per listed user
};

inline RecallEvalSet build_recall_eval_set(
    const std::vector<UserProfile>& train_profiles,
    const std::vector<ImpressionLog>& eval_impressions) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < train_profiles.size(); ++i) {
    by_id.emplace(train_profiles[i].user_id, i);
  }
  std::unordered_map<std::size_t, std::size_t> listed;
  RecallEvalSet set;
  for (const ImpressionLog& log : eval_impressions) {
    auto it = by_id.find(log.user_id);
    if (it == by_id.end()) continue;  // user unseen in training
    std::size_t row;
    auto lit = listed.find(it->second);
    if (lit == listed.end()) {
      row = set.user_index.size();
      listed.emplace(it->second, row);
      set.user_index.push_back(it->second);
      set.test_clicked.emplace_back();
    } else {
      row = lit->second;
    }
    for (const Candidate& c : log.candidates) {
      if (c.label == 1) set.test_clicked[row].insert(c.news);
    }
  }
  return set;
}

// Mean Recall@k over evaluation users with composition over all M slots.
inline double validation_recall(const std::vector<Tensor>& u_ra,
                                const std::vector<UserProfile>& profiles,
                                const BasisMemory& memory, const Tensor& pool,
                                const RecallEvalSet& set, std::size_t k) {
  NoGradGuard ng;
  double acc = 0.0;
  std::size_t counted = 0;
  for (std::size_t row = 0; row < set.user_index.size(); ++row) {
    if (set.test_clicked[row].empty()) continue;
    const std::size_t ui = set.user_index[row];
    AttentionWeights aw = basis_attention(u_ra[ui], memory);
    Tensor u_re = compose_recall_all(aw, memory);
    RetrievalResult res =
        brute_force_topk(u_re, pool, k, profiles[ui].clicked);
    acc += recall_at_k(res.ids, set.test_clicked[row]);
    ++counted;
  }
  return counted ? acc / static_cast<double>(counted) : std::nan("");
}

struct Stage2Result {
  BasisMemory memory;
  std::vector<EpochStats> history;
  double best_valid_recall = std::nan("");
  std::size_t best_epoch = 0;
};

// Fits the basis memory against the frozen stage-1 model. Gradients flow
// only into the memory keys and values (and optionally the user encoder when
// freeze_user_encoder is off); the news encoder never changes.
inline Stage2Result train_stage2(RankingModel& model, const Corpus& corpus,
                                 const std::vector<ImpressionLog>& train,
                                 const std::vector<ImpressionLog>& valid,
                                 const TrainConfig& tcfg) {
  tcfg.validate();
  Rng master(tcfg.seed);
  Rng mem_rng = master.child(0x5eed0002);
  Stage2Result result;
  result.memory = BasisMemory::init(tcfg.basis_count, model.cfg.dim, mem_rng);
  BasisMemory& memory = result.memory;

  model.set_requires_grad(false);
  const bool tune_user = !tcfg.freeze_user_encoder;
  std::vector<Tensor> params = {memory.keys, memory.values};
  if (tune_user) {
    for (Tensor t : {model.user_attn.wq, model.user_attn.wk, model.user_attn.wv,
                     model.user_attn.wo, model.user_pool.w, model.user_pool.b,
                     model.user_pool.q, model.behavior_pos, model.cold_start}) {
      t.set_requires_grad(true);
      params.push_back(t);
    }
  }
  Adam opt(params,
           {tcfg.stage2_lr > 0.0 ? tcfg.stage2_lr : tcfg.learning_rate});

  const Tensor pool = encode_news_pool(model, corpus);
  const std::vector<UserProfile> profiles = build_user_profiles(train);
  if (profiles.empty()) {
    throw ConfigError("train_stage2: no training users");
  }
  const RecallEvalSet eval_set = build_recall_eval_set(profiles, valid);

  // With the user encoder frozen, u_ra per user is a constant.
  std::vector<Tensor> u_ra(profiles.size());
  auto refresh_u_ra = [&] {
    NoGradGuard ng;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      Tensor hist = history_matrix(pool, profiles[i].history, model.cfg.max_history);
      u_ra[i] = encode_user_rank(model, hist);
    }
  };
  refresh_u_ra();

  double best = -1.0;
  std::size_t since_best = 0;
  std::vector<std::vector<double>> best_snap;
  const std::size_t max_epochs =
      tcfg.stage2_max_epochs ? tcfg.stage2_max_epochs : tcfg.max_epochs;

  for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
    const double t0 = traindetail::now_seconds();
    Rng epoch_rng = master.child(0xb000 + (tcfg.resample_each_epoch ? epoch : 1));
    std::vector<RecallSample> samples = sample_recall_batch(
        profiles, corpus.size(), tcfg.recall_negatives, epoch_rng);
    if (samples.empty()) {
      throw ConfigError("train_stage2: no usable recall samples");
    }
    epoch_rng.shuffle(samples);
    const std::size_t total_steps =
        (samples.size() + tcfg.batch_size - 1) / tcfg.batch_size;
    const std::size_t max_steps =
        tcfg.stage2_steps_per_epoch
            ? std::min(tcfg.stage2_steps_per_epoch, total_steps)
            : total_steps;

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    std::vector<std::size_t> cand_rows;
    for (std::size_t step = 0; step < max_steps; ++step) {
      const std::size_t lo = step * tcfg.batch_size;
      const std::size_t hi = std::min(samples.size(), lo + tcfg.batch_size);
      if (lo >= hi) break;
      std::vector<Tensor> losses;
      losses.reserve(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) {
        const RecallSample& s = samples[i];
        Tensor u;
        if (tune_user) {
          Tensor hist = history_matrix(
              pool, profiles[s.user].history, model.cfg.max_history);
          u = encode_user_rank(model, hist);
        } else {
          u = u_ra[s.user];
        }
        AttentionWeights aw = basis_attention(u, memory);
        // Training composes over all M slots; top-P is a test-phase device.
        Tensor u_re = compose_recall_all(aw, memory);
        cand_rows.clear();
        cand_rows.push_back(static_cast<std::size_t>(s.positive));
        for (int neg : s.negatives) cand_rows.push_back(static_cast<std::size_t>(neg));
        Tensor cand = gather_rows(pool, cand_rows);
        losses.push_back(contrastive_loss(matvec(cand, u_re)));
      }
      Tensor batch_loss = scale(sum(stack_scalars(losses)),
                                1.0 / static_cast<double>(losses.size()));
      opt.zero_grad();
      backward(batch_loss);
      opt.step();
      loss_sum += batch_loss.value() * static_cast<double>(losses.size());
      loss_count += losses.size();
    }
    if (tune_user) refresh_u_ra();

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    stats.valid_metric = validation_recall(u_ra, profiles, memory, pool,
                                           eval_set, tcfg.early_stop_recall_k);
    stats.seconds = traindetail::now_seconds() - t0;
    result.history.push_back(stats);

    if (!std::isnan(stats.valid_metric)) {
      if (stats.valid_metric > best) {
        best = stats.valid_metric;
        result.best_valid_recall = best;
        result.best_epoch = epoch;
        best_snap = traindetail::snapshot(params);
        since_best = 0;
      } else {
        ++since_best;
        if (tcfg.plateau_decay < 1.0 && since_best % 2 == 0) {
          opt.set_lr(opt.config().lr * tcfg.plateau_decay);
        }
        if (since_best >= tcfg.patience) break;
      }
    }
  }
  if (!best_snap.empty()) traindetail::restore(params, best_snap);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint assembly
// ---------------------------------------------------------------------------

inline Checkpoint make_stage1_checkpoint(const RankingModel& model,
                                         std::vector<std::string> history) {
  Checkpoint ckpt;
  ckpt.stage = 1;
  ckpt.memory_count = 0;
  ckpt.model = model;
  ckpt.config_hash = arch_hash(model.cfg, 0);
  ckpt.history = std::move(history);
  return ckpt;
}

inline Checkpoint make_stage2_checkpoint(const RankingModel& model,
                                         const BasisMemory& memory,
                                         std::vector<std::string> history) {
  Checkpoint ckpt;
  ckpt.stage = 2;
  ckpt.memory_count = memory.count();
  ckpt.model = model;
  ckpt.memory = memory;
  ckpt.config_hash = arch_hash(model.cfg, memory.count());
  ckpt.history = std::move(history);
  return ckpt;
}

}  // namespace unirec
