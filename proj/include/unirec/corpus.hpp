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
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "unirec/error.hpp"

namespace unirec {

// MIND-format news and impression data. News ids are resolved to dense
// corpus indices at parse time; the original id strings stay on the article.

struct NewsArticle {
  std::string news_id;
  std::string category;
  std::string title;                // raw text
  std::vector<int> title_tokens;    // fixed length after tokenization
};

struct Candidate {
  int news = -1;  // corpus index
  int label = 0;  // 1 = clicked
};

struct ImpressionLog {
  std::string impression_id;
  std::string user_id;
  std::string timestamp;
  std::vector<int> history;  // corpus indices, oldest -> newest
  std::vector<Candidate> candidates;
};

struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::vector<std::string> id_to_word{"<pad>", "<unk>"};
  std::unordered_map<std::string, int> word_to_id;

  int lookup(const std::string& w) const {
    auto it = word_to_id.find(w);
    return it == word_to_id.end() ? kUnk : it->second;
  }
  std::size_t size() const { return id_to_word.size(); }
};

struct Corpus {
  std::vector<NewsArticle> articles;
  std::unordered_map<std::string, int> id_to_index;
  Vocab vocab;
  std::size_t title_len = 0;  // 0 until tokenized

  int find(const std::string& news_id) const {
    auto it = id_to_index.find(news_id);
    return it == id_to_index.end() ? -1 : it->second;
  }
  std::size_t size() const { return articles.size(); }

  void rebuild_index() {
    id_to_index.clear();
    for (std::size_t i = 0; i < articles.size(); ++i) {
      id_to_index.emplace(articles[i].news_id, static_cast<int>(i));
    }
  }
};

struct ParseStats {
  std::size_t rows = 0;          // rows accepted
  std::size_t skipped_rows = 0;  // malformed rows dropped
  std::size_t dropped_refs = 0;  // unknown news ids dropped from a kept row
};

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

// Lowercase and split on non-alphanumeric runs. Bytes >= 0x80 are kept as
// word characters so multi-byte UTF-8 sequences stay inside one token.
inline std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : text) {
    const bool word_char =
        (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
        (c >= '0' && c <= '9') || c >= 0x80;
    if (word_char) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                         : static_cast<char>(c));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

// Token ids padded/truncated to exactly title_len; prefix kept on overflow.
inline std::vector<int> tokenize_title(const std::string& title,
                                       const Vocab& vocab,
                                       std::size_t title_len) {
  std::vector<int> ids(title_len, Vocab::kPad);
  const std::vector<std::string> words = split_words(title);
  for (std::size_t i = 0; i < words.size() && i < title_len; ++i) {
    ids[i] = vocab.lookup(words[i]);
  }
  return ids;
}

// Ids 0/1 reserved; remaining assigned by descending frequency, ties broken
// lexicographically; words below min_count excluded.
inline Vocab build_vocab(const Corpus& corpus, std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const NewsArticle& a : corpus.articles) {
    for (std::string& w : split_words(a.title)) counts[std::move(w)] += 1;
  }
  std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(),
                                                          counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab vocab;
  for (auto& [word, count] : sorted) {
    if (count < min_count) continue;
    vocab.word_to_id.emplace(word, static_cast<int>(vocab.id_to_word.size()));
    vocab.id_to_word.push_back(word);
  }
  return vocab;
}

inline void tokenize_corpus(Corpus& corpus, std::size_t title_len) {
  corpus.title_len = title_len;
  for (NewsArticle& a : corpus.articles) {
    a.title_tokens = tokenize_title(a.title, corpus.vocab, title_len);
  }
}

// ---------------------------------------------------------------------------
// MIND TSV parsing
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(std::move(tok));
  return out;
}

// news.tsv columns: news_id, category, subcategory, title, abstract, url,
// title_entities, abstract_entities. Only id, category and title are used.
inline Corpus parse_news_tsv(const std::string& path,
                             ParseStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open news file: " + path);
  Corpus corpus;
  ParseStats local;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols = split_tabs(line);
    if (cols.size() < 4 || cols[0].empty()) {
      ++local.skipped_rows;
      continue;
    }
    if (corpus.id_to_index.count(cols[0])) {
      ++local.skipped_rows;  // duplicate id
      continue;
    }
    NewsArticle a;
    a.news_id = cols[0];
    a.category = cols[1];
    a.title = cols[3];
    corpus.id_to_index.emplace(a.news_id, static_cast<int>(corpus.articles.size()));
    corpus.articles.push_back(std::move(a));
    ++local.rows;
  }
  if (stats) *stats = local;
  return corpus;
}

// behaviors.tsv columns: impression_id, user_id, time, space-separated
// history, space-separated "newsid-label" candidate pairs.
inline std::vector<ImpressionLog> parse_behaviors_tsv(
    const std::string& path, const Corpus& corpus,
    ParseStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open behaviors file: " + path);
  std::vector<ImpressionLog> logs;
  ParseStats local;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols = split_tabs(line);
    if (cols.size() < 5) {
      ++local.skipped_rows;
      continue;
    }
    ImpressionLog log;
    log.impression_id = cols[0];
    log.user_id = cols[1];
    log.timestamp = cols[2];
    bool bad_row = false;
    for (const std::string& id : split_spaces(cols[3])) {
      const int idx = corpus.find(id);
      if (idx < 0) {
        ++local.dropped_refs;
        continue;
      }
      log.history.push_back(idx);
    }
    for (const std::string& pair : split_spaces(cols[4])) {
      const std::size_t dash = pair.rfind('-');
      if (dash == std::string::npos || dash + 2 != pair.size() ||
          (pair[dash + 1] != '0' && pair[dash + 1] != '1')) {
        bad_row = true;  // candidate without a -0/-1 suffix
        break;
      }
      const int idx = corpus.find(pair.substr(0, dash));
      if (idx < 0) {
        ++local.dropped_refs;
        continue;
      }
      log.candidates.push_back({idx, pair[dash + 1] - '0'});
    }
    if (bad_row || log.candidates.empty()) {
      ++local.skipped_rows;
      continue;
    }
    logs.push_back(std::move(log));
    ++local.rows;
  }
  if (stats) *stats = local;
  return logs;
}

// ---------------------------------------------------------------------------
// TSV writers (synthetic data and round-trip tests)
// ---------------------------------------------------------------------------

inline void write_news_tsv(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write news file: " + path);
  for (const NewsArticle& a : corpus.articles) {
    out << a.news_id << '\t' << a.category << '\t' << a.category << '\t'
        << a.title << "\t\t\t\t\n";
  }
  if (!out) throw IoError("failed writing news file: " + path);
}

inline void write_behaviors_tsv(const std::vector<ImpressionLog>& logs,
                                const Corpus& corpus,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write behaviors file: " + path);
  for (const ImpressionLog& log : logs) {
    out << log.impression_id << '\t' << log.user_id << '\t' << log.timestamp
        << '\t';
    for (std::size_t i = 0; i < log.history.size(); ++i) {
      if (i) out << ' ';
      out << corpus.articles[log.history[i]].news_id;
    }
    out << '\t';
    for (std::size_t i = 0; i < log.candidates.size(); ++i) {
      if (i) out << ' ';
      out << corpus.articles[log.candidates[i].news].news_id << '-'
          << log.candidates[i].label;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing behaviors file: " + path);
}

// ---------------------------------------------------------------------------
// Binary caches (little-endian)
// ---------------------------------------------------------------------------

namespace cacheio {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw CompatibilityError("cache: truncated integer");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_str(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_str(std::istream& in) {
  const std::uint64_t n = get_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw CompatibilityError("cache: truncated string");
  return s;
}

}  // namespace cacheio

inline void save_corpus_cache(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus cache: " + path);
  out.write("UNCC", 4);
  cacheio::put_u64(out, 1);  // version
  cacheio::put_u64(out, corpus.title_len);
  cacheio::put_u64(out, corpus.vocab.size());
  for (const std::string& w : corpus.vocab.id_to_word) cacheio::put_str(out, w);
  cacheio::put_u64(out, corpus.articles.size());
  for (const NewsArticle& a : corpus.articles) {
    cacheio::put_str(out, a.news_id);
    cacheio::put_str(out, a.category);
    cacheio::put_str(out, a.title);
    cacheio::put_u64(out, a.title_tokens.size());
    for (int t : a.title_tokens) {
      cacheio::put_u64(out, static_cast<std::uint64_t>(t));
    }
  }
  if (!out) throw IoError("failed writing corpus cache: " + path);
}

inline Corpus load_corpus_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus cache: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "UNCC") {
    throw CompatibilityError("corpus cache: bad magic in " + path);
  }
  if (cacheio::get_u64(in) != 1) {
    throw CompatibilityError("corpus cache: unsupported version");
  }
  Corpus corpus;
  corpus.title_len = cacheio::get_u64(in);
  const std::uint64_t vocab_size = cacheio::get_u64(in);
  corpus.vocab.id_to_word.clear();
  for (std::uint64_t i = 0; i < vocab_size; ++i) {
    corpus.vocab.id_to_word.push_back(cacheio::get_str(in));
  }
  for (std::size_t i = 2; i < corpus.vocab.id_to_word.size(); ++i) {
    corpus.vocab.word_to_id.emplace(corpus.vocab.id_to_word[i],
                                    static_cast<int>(i));
  }
  const std::uint64_t count = cacheio::get_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    NewsArticle a;
    a.news_id = cacheio::get_str(in);
    a.category = cacheio::get_str(in);
    a.title = cacheio::get_str(in);
    const std::uint64_t ntok = cacheio::get_u64(in);
    a.title_tokens.resize(ntok);
    for (std::uint64_t t = 0; t < ntok; ++t) {
      a.title_tokens[t] = static_cast<int>(cacheio::get_u64(in));
    }
    corpus.articles.push_back(std::move(a));
  }
  corpus.rebuild_index();
  return corpus;
}

inline void save_impressions_cache(const std::vector<ImpressionLog>& logs,
                                   const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write impressions cache: " + path);
  out.write("UNIC", 4);
  cacheio::put_u64(out, 1);
  cacheio::put_u64(out, logs.size());
  for (const ImpressionLog& log : logs) {
    cacheio::put_str(out, log.impression_id);
    cacheio::put_str(out, log.user_id);
    cacheio::put_str(out, log.timestamp);
    cacheio::put_u64(out, log.history.size());
    for (int h : log.history) cacheio::put_u64(out, static_cast<std::uint64_t>(h));
    cacheio::put_u64(out, log.candidates.size());
    for (const Candidate& c : log.candidates) {
      cacheio::put_u64(out, static_cast<std::uint64_t>(c.news));
      cacheio::put_u64(out, static_cast<std::uint64_t>(c.label));
    }
  }
  if (!out) throw IoError("failed writing impressions cache: " + path);
}

inline std::vector<ImpressionLog> load_impressions_cache(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open impressions cache: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "UNIC") {
    throw CompatibilityError("impressions cache: bad magic in " + path);
  }
  if (cacheio::get_u64(in) != 1) {
    throw CompatibilityError("impressions cache: unsupported version");
  }
  std::vector<ImpressionLog> logs;
  const std::uint64_t count = cacheio::get_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    ImpressionLog log;
    log.impression_id = cacheio::get_str(in);
    log.user_id = cacheio::get_str(in);
    log.timestamp = cacheio::get_str(in);
    const std::uint64_t nh = cacheio::get_u64(in);
    log.history.resize(nh);
    for (std::uint64_t h = 0; h < nh; ++h) {
      log.history[h] = static_cast<int>(cacheio::get_u64(in));
    }
    const std::uint64_t nc = cacheio::get_u64(in);
    log.candidates.resize(nc);
    for (std::uint64_t c = 0; c < nc; ++c) {
      log.candidates[c].news = static_cast<int>(cacheio::get_u64(in));
      log.candidates[c].label = static_cast<int>(cacheio::get_u64(in));
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

// Table-1 style dataset summary.
struct DatasetSummary {
  std::size_t users = 0;
  std::size_t news = 0;
  std::size_t impressions = 0;
  std::size_t clicks = 0;
  double avg_title_len = 0.0;
  std::size_t categories = 0;
};

inline DatasetSummary summarize(const Corpus& corpus,
                                const std::vector<ImpressionLog>& logs) {
  DatasetSummary s;
  s.news = corpus.size();
  std::unordered_set<std::string> users, cats;
  for (const ImpressionLog& log : logs) {
    users.insert(log.user_id);
    ++s.impressions;
    for (const Candidate& c : log.candidates) s.clicks += c.label;
  }
  for (const NewsArticle& a : corpus.articles) cats.insert(a.category);
  s.users = users.size();
  s.categories = cats.size();
  double words = 0.0;
  for (const NewsArticle& a : corpus.articles) {
    words += static_cast<double>(split_words(a.title).size());
  }
  s.avg_title_len = corpus.size() ? words / static_cast<double>(corpus.size()) : 0.0;
  return s;
}

}  // namespace unirec
