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

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "unirec/metrics.hpp"
#include "unirec/model.hpp"
#include "unirec/training.hpp"

namespace unirec {

// Named metric values, one entry per repetition, with run metadata.
struct MetricsReport {
  std::string task;   // "ranking" or "recall"
  std::string label;  // e.g. "UniRec(top)", "UniRec(all)", "YoutubeNet"
  std::vector<std::string> metric_names;  // presentation order
  std::map<std::string, std::vector<double>> values;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string dataset_id;
  double wall_seconds = 0.0;  // informational; not serialized

  void add(const std::string& name, double v) {
    auto it = values.find(name);
    if (it == values.end()) {
      metric_names.push_back(name);
      values[name] = {v};
    } else {
      it->second.push_back(v);
    }
  }

  double mean(const std::string& name) const {
    const std::vector<double>& v = values.at(name);
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }

  double stddev(const std::string& name) const {
    const std::vector<double>& v = values.at(name);
    if (v.size() < 2) return 0.0;
    const double m = mean(name);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  }

  // Merge another repetition of the same metric set.
  void absorb(const MetricsReport& other) {
    for (const std::string& name : other.metric_names) {
      for (double v : other.values.at(name)) add(name, v);
    }
  }
};

// Mean per-impression AUC / MRR / nDCG@5 / nDCG@10. Impressions without the
// signal a metric needs (single class, no positive) are excluded from that
// metric's average.
inline MetricsReport evaluate_ranking(const RankingModel& model,
                                      const Corpus& corpus,
                                      const std::vector<ImpressionLog>& test) {
  if (test.empty()) throw ConfigError("evaluate_ranking: empty test set");
  NoGradGuard ng;
  const double t0 = traindetail::now_seconds();
  Tensor pool = encode_news_pool(model, corpus);
  double auc_sum = 0, mrr_sum = 0, n5_sum = 0, n10_sum = 0;
  std::size_t auc_n = 0, mrr_n = 0, n5_n = 0, n10_n = 0;
  std::vector<double> scores;
  std::vector<int> labels;
  for (const ImpressionLog& log : test) {
    Tensor hist = history_matrix(pool, log.history, model.cfg.max_history);
    Tensor u = encode_user_rank(model, hist);
    scores.clear();
    labels.clear();
    for (const Candidate& c : log.candidates) {
      const double* r = pool.data() + static_cast<std::size_t>(c.news) * model.cfg.dim;
      double s = 0.0;
      for (std::size_t t = 0; t < model.cfg.dim; ++t) s += u(t) * r[t];
      scores.push_back(s);
      labels.push_back(c.label);
    }
    if (auto v = auc(scores, labels)) {
      auc_sum += *v;
      ++auc_n;
    }
    if (auto v = mrr(scores, labels)) {
      mrr_sum += *v;
      ++mrr_n;
    }
    if (auto v = ndcg_at_k(scores, labels, 5)) {
      n5_sum += *v;
      ++n5_n;
    }
    if (auto v = ndcg_at_k(scores, labels, 10)) {
      n10_sum += *v;
      ++n10_n;
    }
  }
  MetricsReport report;
  report.task = "ranking";
  report.label = "UniRec";
  if (auc_n) report.add("auc", auc_sum / static_cast<double>(auc_n));
  if (mrr_n) report.add("mrr", mrr_sum / static_cast<double>(mrr_n));
  if (n5_n) report.add("ndcg@5", n5_sum / static_cast<double>(n5_n));
  if (n10_n) report.add("ndcg@10", n10_sum / static_cast<double>(n10_n));
  report.wall_seconds = traindetail::now_seconds() - t0;
  return report;
}

enum class RecallMode { kAll, kTop, kAveragePool };

inline const char* recall_mode_label(RecallMode mode) {
  switch (mode) {
    case RecallMode::kAll:
      return "UniRec(all)";
    case RecallMode::kTop:
      return "UniRec(top)";
    case RecallMode::kAveragePool:
      return "YoutubeNet";
  }
  return "?";
}

// Recall@K over test users. The pool is the whole corpus minus the user's
// training-period clicks; the denominator is the user's test-period clicks.
inline MetricsReport evaluate_recall(const RankingModel& model,
                                     const BasisMemory* memory,
                                     const Corpus& corpus,
                                     const std::vector<ImpressionLog>& train,
                                     const std::vector<ImpressionLog>& test,
                                     const std::vector<std::size_t>& k_list,
                                     RecallMode mode, std::size_t top_p) {
  if (test.empty()) throw ConfigError("evaluate_recall: empty test set");
  if (k_list.empty()) throw ConfigError("evaluate_recall: empty K list");
  if (mode != RecallMode::kAveragePool && memory == nullptr) {
    throw ConfigError("evaluate_recall: mode needs a basis memory");
  }
  if (mode == RecallMode::kTop &&
      (top_p < 1 || top_p > memory->count())) {
    throw ConfigError("evaluate_recall: need 1 <= P <= M");
  }
  NoGradGuard ng;
  const double t0 = traindetail::now_seconds();
  Tensor pool = encode_news_pool(model, corpus);
  std::vector<UserProfile> profiles = build_user_profiles(train);
  RecallEvalSet eval_set = build_recall_eval_set(profiles, test);
  std::size_t k_max = 0;
  for (std::size_t k : k_list) k_max = std::max(k_max, k);

  std::vector<double> sums(k_list.size(), 0.0);
  std::size_t counted = 0;
  for (std::size_t row = 0; row < eval_set.user_index.size(); ++row) {
    if (eval_set.test_clicked[row].empty()) continue;
    const UserProfile& u = profiles[eval_set.user_index[row]];
    Tensor hist = history_matrix(pool, u.history, model.cfg.max_history);
    Tensor u_re;
    if (mode == RecallMode::kAveragePool) {
      u_re = average_pool_user(model, hist);
    } else {
      Tensor u_ra = encode_user_rank(model, hist);
      AttentionWeights aw = basis_attention(u_ra, *memory);
      u_re = mode == RecallMode::kAll
                 ? compose_recall_all(aw, *memory)
                 : compose_recall_top(aw, *memory, top_p,
                                      model.cfg.top_renorm_linear)
                       .u_re;
    }
    RetrievalResult res = brute_force_topk(u_re, pool, k_max, u.clicked);
    for (std::size_t i = 0; i < k_list.size(); ++i) {
      const std::size_t k = std::min(k_list[i], res.ids.size());
      std::vector<int> prefix(res.ids.begin(), res.ids.begin() + k);
      sums[i] += recall_at_k(prefix, eval_set.test_clicked[row]);
    }
    ++counted;
  }
  if (counted == 0) {
    throw ConfigError("evaluate_recall: no evaluable users");
  }
  MetricsReport report;
  report.task = "recall";
  report.label = recall_mode_label(mode);
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    report.add("recall@" + std::to_string(k_list[i]),
               sums[i] / static_cast<double>(counted));
  }
  report.wall_seconds = traindetail::now_seconds() - t0;
  return report;
}

}  // namespace unirec
