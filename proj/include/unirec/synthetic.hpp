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

#include <cstdio>
#include <string>
#include <unordered_set>
#include <vector>

#include "unirec/corpus.hpp"
#include "unirec/rng.hpp"

namespace unirec {

// Topic-structured synthetic dataset. Every news item belongs to one topic
// and samples its title from that topic's word pool; every user prefers 1-3
// topics and clicks preferred-topic candidates with a fixed probability.
// Topics carry an internal subtopic refinement (word pools cluster within a
// topic, users leant towards particular subtopics) so that embeddings can
// discriminate inside a topic as well as across topics. Impressions are
// split chronologically per user.
struct SyntheticSpec {
  std::size_t num_topics = 5;
  std::size_t num_users = 2000;
  std::size_t num_news = 3000;
  std::size_t words_per_topic = 50;
  std::uint64_t seed = 7;

  std::size_t subtopics_per_topic = 4;
  double subtopic_word_frac = 1.0;   // title words from own subtopic pool
  std::size_t impressions_per_user = 30;
  std::size_t candidates_per_impression = 10;
  std::size_t max_clicks_per_impression = 2;
  double preferred_click_prob = 0.9;
  double subtopic_click_prob = 0.95; // within a preferred topic
  double contamination = 0.2;        // non-clicked slot from a preferred topic
  std::size_t title_len_min = 4;
  std::size_t title_len_max = 8;
  double train_frac = 0.7;
  double valid_frac = 0.1;  // remainder is test
};

struct SyntheticData {
  Corpus corpus;  // raw titles; tokenize separately
  std::vector<ImpressionLog> train, valid, test;
  std::vector<std::size_t> news_topic;                 // per news index
  std::vector<std::vector<std::size_t>> user_topics;   // preferred topics
};

namespace detail {

inline std::string zero_pad(std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*zu", width, v);
  return buf;
}

}  // namespace detail

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_topics < 1 || spec.num_users < 1 || spec.num_news < 1 ||
      spec.words_per_topic < 1) {
    throw ConfigError("generate_synthetic: all counts must be >= 1");
  }
  if (spec.candidates_per_impression < 2 ||
      spec.max_clicks_per_impression >= spec.candidates_per_impression) {
    throw ConfigError("generate_synthetic: need more candidates than clicks");
  }
  const std::size_t subs =
      std::max<std::size_t>(1, std::min(spec.subtopics_per_topic,
                                        spec.words_per_topic));
  Rng rng(spec.seed);
  SyntheticData data;

  // News pool. Word w of topic t belongs to sub-pool w % subs.
  std::vector<std::vector<std::size_t>> topic_news(spec.num_topics);
  std::vector<std::vector<std::vector<std::size_t>>> sub_news(
      spec.num_topics, std::vector<std::vector<std::size_t>>(subs));
  data.news_topic.resize(spec.num_news);
  for (std::size_t n = 0; n < spec.num_news; ++n) {
    const std::size_t topic = rng.uniform_index(spec.num_topics);
    const std::size_t sub = rng.uniform_index(subs);
    data.news_topic[n] = topic;
    topic_news[topic].push_back(n);
    sub_news[topic][sub].push_back(n);
    NewsArticle a;
    a.news_id = "N" + detail::zero_pad(n + 1, 6);
    a.category = "topic" + std::to_string(topic);
    const std::size_t len =
        spec.title_len_min +
        rng.uniform_index(spec.title_len_max - spec.title_len_min + 1);
    for (std::size_t w = 0; w < len; ++w) {
      std::size_t word;
      if (rng.uniform() < spec.subtopic_word_frac) {
        // Word from the article's own sub-pool.
        const std::size_t span = (spec.words_per_topic + subs - 1) / subs;
        const std::size_t k = rng.uniform_index(span);
        word = std::min(k * subs + sub, spec.words_per_topic - 1);
      } else {
        word = rng.uniform_index(spec.words_per_topic);
      }
      if (w) a.title += ' ';
      a.title += "t" + std::to_string(topic) + "w" + std::to_string(word);
    }
    data.corpus.id_to_index.emplace(a.news_id,
                                    static_cast<int>(data.corpus.articles.size()));
    data.corpus.articles.push_back(std::move(a));
  }
  for (std::size_t t = 0; t < spec.num_topics; ++t) {
    if (topic_news[t].empty()) {
      throw ConfigError("generate_synthetic: topic " + std::to_string(t) +
                        " received no news; increase num_news");
    }
    for (std::size_t s = 0; s < subs; ++s) {
      if (sub_news[t][s].empty()) sub_news[t][s] = topic_news[t];
    }
  }

  // Users: 1-3 weighted preferred topics, 1-2 preferred subtopics each.
  struct UserPrefs {
    std::vector<std::size_t> topics;
    std::vector<double> topic_cdf;
    std::vector<std::vector<std::size_t>> subs;  // per preferred topic
  };
  std::vector<UserPrefs> users(spec.num_users);
  data.user_topics.resize(spec.num_users);
  for (std::size_t u = 0; u < spec.num_users; ++u) {
    const std::size_t want = 1 + rng.uniform_index(3);
    const std::size_t count = std::min(want, spec.num_topics);
    UserPrefs& p = users[u];
    p.topics = rng.sample_distinct(spec.num_topics, count,
                                   [](std::size_t) { return false; });
    data.user_topics[u] = p.topics;
    // Primary interest dominates: weights 1, 0.5, 0.25 before normalization.
    double total = 0.0;
    std::vector<double> w(count);
    for (std::size_t i = 0; i < count; ++i) {
      w[i] = std::pow(0.5, static_cast<double>(i));
      total += w[i];
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      acc += w[i] / total;
      p.topic_cdf.push_back(acc);
    }
    p.subs.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t nsub = std::min<std::size_t>(1 + rng.uniform_index(2), subs);
      p.subs[i] = rng.sample_distinct(subs, nsub, [](std::size_t) { return false; });
    }
  }

  auto pick_weighted = [&rng](const std::vector<double>& cdf) {
    const double r = rng.uniform();
    for (std::size_t i = 0; i < cdf.size(); ++i) {
      if (r < cdf[i]) return i;
    }
    return cdf.size() - 1;
  };

  std::size_t impression_counter = 0;
  for (std::size_t u = 0; u < spec.num_users; ++u) {
    const UserPrefs& prefs = users[u];
    std::vector<int> clicked_so_far;
    std::vector<ImpressionLog> user_logs;
    std::unordered_set<std::size_t> in_impression;

    // Uniform draw over news outside the user's preferred topics.
    auto draw_non_preferred = [&]() {
      for (int tries = 0; tries < 64; ++tries) {
        const std::size_t n = rng.uniform_index(spec.num_news);
        bool preferred = false;
        for (std::size_t t : prefs.topics) {
          if (data.news_topic[n] == t) {
            preferred = true;
            break;
          }
        }
        if (!preferred) return n;
      }
      return static_cast<std::size_t>(rng.uniform_index(spec.num_news));
    };

    for (std::size_t imp = 0; imp < spec.impressions_per_user; ++imp) {
      ImpressionLog log;
      log.impression_id = "I" + detail::zero_pad(++impression_counter, 8);
      log.user_id = "U" + detail::zero_pad(u + 1, 5);
      log.timestamp = "t" + detail::zero_pad(imp, 6);
      log.history = clicked_so_far;

      in_impression.clear();
      std::vector<std::size_t> clicked_news, other_news;
      const std::size_t clicks =
          1 + rng.uniform_index(spec.max_clicks_per_impression);
      while (clicked_news.size() < clicks) {
        std::size_t n;
        if (rng.uniform() < spec.preferred_click_prob) {
          const std::size_t ti = pick_weighted(prefs.topic_cdf);
          const std::size_t topic = prefs.topics[ti];
          if (rng.uniform() < spec.subtopic_click_prob) {
            const auto& mysubs = prefs.subs[ti];
            const std::size_t sub = mysubs[rng.uniform_index(mysubs.size())];
            n = sub_news[topic][sub][rng.uniform_index(sub_news[topic][sub].size())];
          } else {
            n = topic_news[topic][rng.uniform_index(topic_news[topic].size())];
          }
        } else {
          n = draw_non_preferred();
        }
        if (in_impression.insert(n).second) clicked_news.push_back(n);
      }
      while (clicked_news.size() + other_news.size() <
             spec.candidates_per_impression) {
        std::size_t n;
        if (rng.uniform() < spec.contamination) {
          const std::size_t topic =
              prefs.topics[rng.uniform_index(prefs.topics.size())];
          n = topic_news[topic][rng.uniform_index(topic_news[topic].size())];
        } else {
          n = draw_non_preferred();
        }
        if (in_impression.insert(n).second) other_news.push_back(n);
      }

      // Interleave clicked and non-clicked slots deterministically.
      std::vector<Candidate> cands;
      for (std::size_t n : clicked_news) cands.push_back({static_cast<int>(n), 1});
      for (std::size_t n : other_news) cands.push_back({static_cast<int>(n), 0});
      rng.shuffle(cands);
      for (const Candidate& c : cands) {
        log.candidates.push_back(c);
        if (c.label == 1) clicked_so_far.push_back(c.news);
      }
      user_logs.push_back(std::move(log));
    }

    // Chronological split per user.
    const std::size_t n = user_logs.size();
    const auto n_train = static_cast<std::size_t>(spec.train_frac * n + 0.5);
    const auto n_valid = static_cast<std::size_t>(spec.valid_frac * n + 0.5);
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_train) {
        data.train.push_back(std::move(user_logs[i]));
      } else if (i < n_train + n_valid) {
        data.valid.push_back(std::move(user_logs[i]));
      } else {
        data.test.push_back(std::move(user_logs[i]));
      }
    }
  }
  return data;
}

}  // namespace unirec
