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

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "unirec/corpus.hpp"
#include "unirec/rng.hpp"

namespace unirec {

// One (impression, clicked candidate) pair with in-impression negatives.
struct RankingSample {
  std::vector<int> history;
  int positive = -1;
  std::vector<int> negatives;  // K ids
};

// One (user, clicked news) pair with corpus-wide negatives.
struct RecallSample {
  int user = -1;  // index into the profile list
  int positive = -1;
  std::vector<int> negatives;  // T ids
};

// Per-user view of the training impressions: behavior sequence for encoding,
// clicked set for negative exclusion, positives for recall training.
// Impressions are consumed in input order; users keep first-seen order.
struct UserProfile {
  std::string user_id;
  std::vector<int> history;               // ordered clicks, oldest -> newest
  std::unordered_set<int> clicked;        // history + clicked candidates
  std::vector<int> positives;             // clicked candidates, in order
};

inline std::vector<UserProfile> build_user_profiles(
    const std::vector<ImpressionLog>& impressions) {
  std::vector<UserProfile> profiles;
  std::unordered_map<std::string, std::size_t> index;
  for (const ImpressionLog& log : impressions) {
    auto [it, inserted] = index.emplace(log.user_id, profiles.size());
    if (inserted) {
      profiles.emplace_back();
      profiles.back().user_id = log.user_id;
    }
    UserProfile& u = profiles[it->second];
    for (int h : log.history) {
      if (u.clicked.insert(h).second) u.history.push_back(h);
    }
    for (const Candidate& c : log.candidates) {
      if (c.label != 1) continue;
      u.positives.push_back(c.news);
      if (u.clicked.insert(c.news).second) u.history.push_back(c.news);
    }
  }
  return profiles;
}

// One sample per (impression, clicked candidate). Negatives come from the
// same impression's non-clicked candidates: without replacement when at
// least K are displayed, with replacement otherwise. Impressions with no
// non-clicked candidate are skipped.
inline std::vector<RankingSample> sample_ranking_batch(
    const std::vector<ImpressionLog>& impressions, std::size_t k, Rng& rng) {
  if (k < 1) throw ConfigError("sample_ranking_batch: K must be >= 1");
  std::vector<RankingSample> samples;
  std::vector<int> non_clicked;
  for (const ImpressionLog& log : impressions) {
    non_clicked.clear();
    for (const Candidate& c : log.candidates) {
      if (c.label == 0) non_clicked.push_back(c.news);
    }
    if (non_clicked.empty()) continue;
    for (const Candidate& c : log.candidates) {
      if (c.label != 1) continue;
      RankingSample s;
      s.history = log.history;
      s.positive = c.news;
      if (non_clicked.size() >= k) {
        std::vector<std::size_t> picks = rng.sample_distinct(
            non_clicked.size(), k, [](std::size_t) { return false; });
        for (std::size_t p : picks) s.negatives.push_back(non_clicked[p]);
      } else {
        for (std::size_t i = 0; i < k; ++i) {
          s.negatives.push_back(non_clicked[rng.uniform_index(non_clicked.size())]);
        }
      }
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

// One sample per (user, clicked news). Negatives are sampled uniformly from
// the whole corpus excluding the user's clicked set, without replacement
// while the eligible pool allows it.
inline std::vector<RecallSample> sample_recall_batch(
    const std::vector<UserProfile>& profiles, std::size_t corpus_size,
    std::size_t t, Rng& rng) {
  if (t < 1) throw ConfigError("sample_recall_batch: T must be >= 1");
  if (corpus_size < t + 1) {
    throw ConfigError("sample_recall_batch: corpus size " +
                      std::to_string(corpus_size) + " must exceed T = " +
                      std::to_string(t));
  }
  std::vector<RecallSample> samples;
  for (std::size_t ui = 0; ui < profiles.size(); ++ui) {
    const UserProfile& u = profiles[ui];
    for (int pos : u.positives) {
      RecallSample s;
      s.user = static_cast<int>(ui);
      s.positive = pos;
      std::vector<std::size_t> picks = rng.sample_distinct(
          corpus_size, t,
          [&u](std::size_t i) { return u.clicked.count(static_cast<int>(i)) > 0; });
      for (std::size_t p : picks) s.negatives.push_back(static_cast<int>(p));
      // Heavy clickers can exhaust the eligible pool; top up with repeats.
      while (s.negatives.size() < t && !s.negatives.empty()) {
        s.negatives.push_back(s.negatives[rng.uniform_index(s.negatives.size())]);
      }
      if (s.negatives.size() < t) continue;  // nothing eligible at all
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

// Convenience wrapper matching the impression-level interface.
inline std::vector<RecallSample> sample_recall_batch(
    const std::vector<ImpressionLog>& impressions, const Corpus& corpus,
    std::size_t t, Rng& rng) {
  return sample_recall_batch(build_user_profiles(impressions), corpus.size(),
                             t, rng);
}

}  // namespace unirec
