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

#include "gtest/gtest.h"
#include "temp_dir.hpp"
#include "unirec/corpus.hpp"

namespace unirec {
namespace {

Corpus tiny_corpus() {
  Corpus c;
  for (const char* id : {"N1", "N2", "N3", "N4"}) {
    NewsArticle a;
    a.news_id = id;
    a.category = "cat";
    a.title = std::string("title of ") + id;
    c.id_to_index.emplace(a.news_id, static_cast<int>(c.articles.size()));
    c.articles.push_back(std::move(a));
  }
  return c;
}

TEST(Tokenizer, SplitsOnNonAlnumAndLowercases) {
  EXPECT_EQ(split_words("Team wins, final!"),
            (std::vector<std::string>{"team", "wins", "final"}));
  EXPECT_EQ(split_words("  a-b_c 42x  "),
            (std::vector<std::string>{"a", "b", "c", "42x"}));
  EXPECT_TRUE(split_words("...").empty());
}

TEST(Tokenizer, EmptyTitleIsAllPadding) {
  Vocab v;
  std::vector<int> ids = tokenize_title("", v, 5);
  EXPECT_EQ(ids, (std::vector<int>(5, Vocab::kPad)));
}

TEST(Tokenizer, TruncatesKeepingPrefix) {
  Corpus c;
  NewsArticle a;
  a.news_id = "N1";
  a.title = "w1 w2 w3 w4 w5";
  c.articles.push_back(a);
  Vocab v = build_vocab(c, 1);
  std::vector<int> ids = tokenize_title(a.title, v, 3);
  ASSERT_EQ(ids.size(), 3u);
  for (int id : ids) EXPECT_GE(id, 2);
  EXPECT_EQ(ids[0], v.lookup("w1"));
  EXPECT_EQ(ids[2], v.lookup("w3"));
}

TEST(Tokenizer, UnknownWordsMapToUnk) {
  Vocab v;
  v.word_to_id.emplace("known", 2);
  v.id_to_word.push_back("known");
  std::vector<int> ids = tokenize_title("known mystery", v, 4);
  EXPECT_EQ(ids[0], 2);
  EXPECT_EQ(ids[1], Vocab::kUnk);
  EXPECT_EQ(ids[2], Vocab::kPad);
}

TEST(Vocab, FrequencyThenLexicographicOrder) {
  Corpus c;
  NewsArticle a;
  a.title = "a b";
  c.articles.push_back(a);
  a.title = "a";
  c.articles.push_back(a);
  Vocab v = build_vocab(c, 1);
  EXPECT_EQ(v.lookup("a"), 2);
  EXPECT_EQ(v.lookup("b"), 3);

  // Ties resolve lexicographically.
  Corpus c2;
  a.title = "zeta alpha";
  c2.articles.push_back(a);
  Vocab v2 = build_vocab(c2, 1);
  EXPECT_EQ(v2.lookup("alpha"), 2);
  EXPECT_EQ(v2.lookup("zeta"), 3);
}

TEST(Vocab, MinCountExcludes) {
  Corpus c;
  NewsArticle a;
  a.title = "rare common common";
  c.articles.push_back(a);
  Vocab v = build_vocab(c, 2);
  EXPECT_EQ(v.size(), 3u);  // pad, unk, common
  EXPECT_EQ(v.lookup("rare"), Vocab::kUnk);
  Vocab v2 = build_vocab(c, 99);
  EXPECT_EQ(v2.size(), 2u);  // reserved only
}

TEST(ParseNews, BasicRowAndTokens) {
  testutil::TempDir dir("news");
  testutil::write_file(dir.file("news.tsv"),
                       "N1\tsports\tsoccer\tTeam wins final\turl\t\t\t\n");
  ParseStats stats;
  Corpus c = parse_news_tsv(dir.file("news.tsv"), &stats);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(stats.skipped_rows, 0u);
  EXPECT_EQ(c.articles[0].news_id, "N1");
  EXPECT_EQ(c.articles[0].category, "sports");
  c.vocab = build_vocab(c, 1);
  tokenize_corpus(c, 5);
  const std::vector<int>& t = c.articles[0].title_tokens;
  EXPECT_EQ(t[0], c.vocab.lookup("team"));
  EXPECT_EQ(t[1], c.vocab.lookup("wins"));
  EXPECT_EQ(t[2], c.vocab.lookup("final"));
  EXPECT_EQ(t[3], Vocab::kPad);
}

TEST(ParseNews, EmptyFileAndMissingFile) {
  testutil::TempDir dir("news_empty");
  testutil::write_file(dir.file("empty.tsv"), "");
  ParseStats stats;
  Corpus c = parse_news_tsv(dir.file("empty.tsv"), &stats);
  EXPECT_EQ(c.size(), 0u);
  EXPECT_EQ(stats.skipped_rows, 0u);
  EXPECT_THROW(parse_news_tsv(dir.file("missing.tsv")), IoError);
}

TEST(ParseNews, ShortRowsSkippedWithCount) {
  testutil::TempDir dir("news_bad");
  testutil::write_file(dir.file("news.tsv"),
                       "N1\tcat\tsub\ttitle one\n"
                       "garbage line without tabs\n"
                       "N2\tcat\n"
                       "N3\tcat\tsub\ttitle three\n");
  ParseStats stats;
  Corpus c = parse_news_tsv(dir.file("news.tsv"), &stats);
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(stats.skipped_rows, 2u);
  // Line-count oracle: kept rows + skipped rows == line count.
  EXPECT_EQ(c.size() + stats.skipped_rows, 4u);
}

TEST(ParseBehaviors, BasicRow) {
  testutil::TempDir dir("beh");
  Corpus c = tiny_corpus();
  testutil::write_file(dir.file("behaviors.tsv"),
                       "1\tU1\ttime\tN1 N2\tN3-1 N4-0\n");
  std::vector<ImpressionLog> logs =
      parse_behaviors_tsv(dir.file("behaviors.tsv"), c);
  ASSERT_EQ(logs.size(), 1u);
  EXPECT_EQ(logs[0].user_id, "U1");
  EXPECT_EQ(logs[0].history, (std::vector<int>{0, 1}));
  ASSERT_EQ(logs[0].candidates.size(), 2u);
  EXPECT_EQ(logs[0].candidates[0].news, 2);
  EXPECT_EQ(logs[0].candidates[0].label, 1);
  EXPECT_EQ(logs[0].candidates[1].news, 3);
  EXPECT_EQ(logs[0].candidates[1].label, 0);
}

TEST(ParseBehaviors, EmptyHistoryRetained) {
  testutil::TempDir dir("beh_cold");
  Corpus c = tiny_corpus();
  testutil::write_file(dir.file("behaviors.tsv"), "1\tU1\ttime\t\tN3-1\n");
  std::vector<ImpressionLog> logs =
      parse_behaviors_tsv(dir.file("behaviors.tsv"), c);
  ASSERT_EQ(logs.size(), 1u);
  EXPECT_TRUE(logs[0].history.empty());
}

TEST(ParseBehaviors, AllUnknownCandidatesSkipsRow) {
  testutil::TempDir dir("beh_unknown");
  Corpus c = tiny_corpus();
  testutil::write_file(dir.file("behaviors.tsv"),
                       "1\tU1\ttime\tN1\tNX-1 NY-0\n"
                       "2\tU2\ttime\tN1\tN2-1 NY-0\n");
  ParseStats stats;
  std::vector<ImpressionLog> logs =
      parse_behaviors_tsv(dir.file("behaviors.tsv"), c, &stats);
  ASSERT_EQ(logs.size(), 1u);
  EXPECT_EQ(logs[0].user_id, "U2");
  EXPECT_EQ(stats.skipped_rows, 1u);
  EXPECT_EQ(stats.dropped_refs, 3u);
}

TEST(ParseBehaviors, BadLabelSuffixSkipsRow) {
  testutil::TempDir dir("beh_badlabel");
  Corpus c = tiny_corpus();
  testutil::write_file(dir.file("behaviors.tsv"),
                       "1\tU1\ttime\tN1\tN2-1 N33\n"
                       "2\tU1\ttime\tN1\tN2-7\n"
                       "3\tU1\ttime\tN1\tN2-1\n");
  ParseStats stats;
  std::vector<ImpressionLog> logs =
      parse_behaviors_tsv(dir.file("behaviors.tsv"), c, &stats);
  ASSERT_EQ(logs.size(), 1u);
  EXPECT_EQ(logs[0].impression_id, "3");
  EXPECT_EQ(stats.skipped_rows, 2u);
}

TEST(RoundTrip, NewsAndBehaviorsSurviveRewrite) {
  testutil::TempDir dir("roundtrip");
  Corpus c = tiny_corpus();
  std::vector<ImpressionLog> logs;
  ImpressionLog log;
  log.impression_id = "7";
  log.user_id = "U9";
  log.timestamp = "t0";
  log.history = {0, 2};
  log.candidates = {{1, 1}, {3, 0}};
  logs.push_back(log);

  write_news_tsv(c, dir.file("news.tsv"));
  write_behaviors_tsv(logs, c, dir.file("behaviors.tsv"));
  Corpus c2 = parse_news_tsv(dir.file("news.tsv"));
  ASSERT_EQ(c2.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c2.articles[i].news_id, c.articles[i].news_id);
    EXPECT_EQ(c2.articles[i].category, c.articles[i].category);
    EXPECT_EQ(c2.articles[i].title, c.articles[i].title);
  }
  std::vector<ImpressionLog> logs2 =
      parse_behaviors_tsv(dir.file("behaviors.tsv"), c2);
  ASSERT_EQ(logs2.size(), 1u);
  EXPECT_EQ(logs2[0].history, log.history);
  EXPECT_EQ(logs2[0].candidates[0].news, 1);
  EXPECT_EQ(logs2[0].candidates[0].label, 1);
}

TEST(Caches, CorpusAndImpressionsRoundTrip) {
  testutil::TempDir dir("cache");
  Corpus c = tiny_corpus();
  c.vocab = build_vocab(c, 1);
  tokenize_corpus(c, 6);
  save_corpus_cache(c, dir.file("corpus.bin"));
  Corpus c2 = load_corpus_cache(dir.file("corpus.bin"));
  ASSERT_EQ(c2.size(), c.size());
  EXPECT_EQ(c2.title_len, c.title_len);
  EXPECT_EQ(c2.vocab.size(), c.vocab.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c2.articles[i].news_id, c.articles[i].news_id);
    EXPECT_EQ(c2.articles[i].title_tokens, c.articles[i].title_tokens);
  }

  std::vector<ImpressionLog> logs(1);
  logs[0].impression_id = "1";
  logs[0].user_id = "U1";
  logs[0].timestamp = "t";
  logs[0].history = {0, 1, 2};
  logs[0].candidates = {{3, 1}};
  save_impressions_cache(logs, dir.file("imp.bin"));
  std::vector<ImpressionLog> logs2 = load_impressions_cache(dir.file("imp.bin"));
  ASSERT_EQ(logs2.size(), 1u);
  EXPECT_EQ(logs2[0].history, logs[0].history);
  EXPECT_EQ(logs2[0].candidates[0].news, 3);

  // Corrupt / truncated cache fails loudly.
  testutil::write_file(dir.file("bad.bin"), "UNCCxx");
  EXPECT_THROW(load_corpus_cache(dir.file("bad.bin")), CompatibilityError);
}

TEST(Summary, CountsFields) {
  Corpus c = tiny_corpus();
  std::vector<ImpressionLog> logs(2);
  logs[0].user_id = "U1";
  logs[0].candidates = {{0, 1}, {1, 0}};
  logs[1].user_id = "U1";
  logs[1].candidates = {{2, 1}, {3, 1}};
  DatasetSummary s = summarize(c, logs);
  EXPECT_EQ(s.users, 1u);
  EXPECT_EQ(s.news, 4u);
  EXPECT_EQ(s.impressions, 2u);
  EXPECT_EQ(s.clicks, 3u);
  EXPECT_EQ(s.categories, 1u);
  EXPECT_DOUBLE_EQ(s.avg_title_len, 3.0);  // "title of Nx"
}

}  // namespace
}  // namespace unirec
