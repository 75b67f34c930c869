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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <unordered_set>
#include <vector>

#include "unirec/error.hpp"
#include "unirec/tensor.hpp"

namespace unirec {

// Rank-quality metrics, computed per impression. Functions return nullopt
// when the impression carries no signal for the metric (single class, no
// positives), matching the report-level exclusion rule.

// Probability that a random positive outscores a random negative; ties count
// one half. Computed via the rank-sum identity with average ranks, which is
// exactly the pairwise count.
inline std::optional<double> auc(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("auc: scores and labels differ in length");
  }
  std::size_t npos = 0;
  for (int l : labels) npos += l == 1;
  const std::size_t nneg = labels.size() - npos;
  if (npos == 0 || nneg == 0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    // Average rank for the tie group [i, j], ranks are 1-based.
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(npos), nn = static_cast<double>(nneg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// Mean over positives of 1/rank in descending-score order; ties break by
// input position.
inline std::optional<double> mrr(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("mrr: scores and labels differ in length");
  }
  double acc = 0.0;
  std::size_t npos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    std::size_t rank = 1;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) ++rank;
    }
    acc += 1.0 / static_cast<double>(rank);
    ++npos;
  }
  if (npos == 0) return std::nullopt;
  return acc / static_cast<double>(npos);
}

// DCG@k with gain = label and discount 1/log2(rank+1), normalized by the
// ideal ordering.
inline std::optional<double> ndcg_at_k(const std::vector<double>& scores,
                                       const std::vector<int>& labels,
                                       std::size_t k) {
  if (scores.size() != labels.size()) {
    throw DimensionError("ndcg: scores and labels differ in length");
  }
  if (k < 1) throw DimensionError("ndcg: k must be >= 1");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  double dcg = 0.0;
  for (std::size_t r = 0; r < order.size() && r < k; ++r) {
    dcg += labels[order[r]] / std::log2(static_cast<double>(r) + 2.0);
  }
  std::vector<int> ideal(labels);
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  double idcg = 0.0;
  for (std::size_t r = 0; r < ideal.size() && r < k; ++r) {
    idcg += ideal[r] / std::log2(static_cast<double>(r) + 2.0);
  }
  if (idcg == 0.0) return std::nullopt;
  return dcg / idcg;
}

// Fraction of the user's test clicks found among the retrieved ids.
inline double recall_at_k(const std::vector<int>& retrieved,
                          const std::unordered_set<int>& test_clicked) {
  if (test_clicked.empty()) {
    throw DimensionError("recall_at_k: empty clicked set");
  }
  std::size_t hits = 0;
  for (int id : retrieved) hits += test_clicked.count(id);
  return static_cast<double>(hits) / static_cast<double>(test_clicked.size());
}

struct RetrievalResult {
  std::vector<int> ids;        // descending score, ties by lower index
  std::vector<double> scores;  // non-increasing
  bool truncated = false;      // fewer eligible items than requested
};

// Exact top-k by inner product over the pool matrix [n x d], after removing
// the exclusion set.
inline RetrievalResult brute_force_topk(const double* query, const Tensor& pool,
                                        std::size_t k,
                                        const std::unordered_set<int>& exclude) {
  const std::size_t n = pool.rows(), d = pool.cols();
  std::vector<std::pair<double, int>> scored;
  scored.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (exclude.count(static_cast<int>(i))) continue;
    const double* r = pool.data() + i * d;
    double s = 0.0;
    for (std::size_t t = 0; t < d; ++t) s += query[t] * r[t];
    scored.emplace_back(s, static_cast<int>(i));
  }
  RetrievalResult out;
  out.truncated = scored.size() < k;
  const std::size_t keep = std::min(k, scored.size());
  auto better = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(), better);
  out.ids.reserve(keep);
  out.scores.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    out.scores.push_back(scored[i].first);
    out.ids.push_back(scored[i].second);
  }
  return out;
}

inline RetrievalResult brute_force_topk(const Tensor& query, const Tensor& pool,
                                        std::size_t k,
                                        const std::unordered_set<int>& exclude) {
  if (query.ndim() != 1 || query.size() != pool.cols()) {
    throw DimensionError("brute_force_topk: query dim mismatch");
  }
  return brute_force_topk(query.data(), pool, k, exclude);
}

}  // namespace unirec
