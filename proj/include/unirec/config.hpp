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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "unirec/model.hpp"
#include "unirec/synthetic.hpp"
#include "unirec/training.hpp"

namespace unirec {

// Plain key=value run configuration with typo-safe keys: anything not in the
// default schema is rejected. File values are overridden by --set pairs.
class RunConfig {
 public:
  RunConfig() : kv_(defaults()) {}

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#') continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": expected key=value");
      }
      cfg.set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) {
    auto it = kv_.find(key);
    if (it == kv_.end()) {
      throw ConfigError("unknown config key: " + key);
    }
    it->second = value;
  }

  void apply_overrides(const std::vector<std::string>& pairs) {
    for (const std::string& p : pairs) {
      const std::size_t eq = p.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("override must be key=value: " + p);
      }
      set(trim(p.substr(0, eq)), trim(p.substr(eq + 1)));
    }
  }

  const std::string& str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
  }

  std::uint64_t u64(const std::string& key) const {
    const std::string& v = str(key);
    try {
      std::size_t used = 0;
      const unsigned long long out = std::stoull(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError("config " + key + ": not an unsigned integer: " + v);
    }
  }

  double f64(const std::string& key) const {
    const std::string& v = str(key);
    try {
      std::size_t used = 0;
      const double out = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError("config " + key + ": not a number: " + v);
    }
  }

  bool flag(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config " + key + ": not a boolean: " + v);
  }

  std::vector<std::size_t> size_list(const std::string& key) const {
    std::vector<std::size_t> out;
    std::stringstream ss(str(key));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      try {
        out.push_back(static_cast<std::size_t>(std::stoull(tok)));
      } catch (const std::exception&) {
        throw ConfigError("config " + key + ": bad list entry: " + tok);
      }
    }
    if (out.empty()) throw ConfigError("config " + key + ": empty list");
    return out;
  }

  // Sorted key=value lines; the exact copy stored in the run directory.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : kv_) out += k + "=" + v + "\n";
    return out;
  }

  // Relative data paths resolve against $UNIREC_DATA_ROOT when it is set.
  std::string resolve_path(const std::string& key) const {
    const std::string& v = str(key);
    if (v.empty()) return v;
    std::filesystem::path p(v);
    if (p.is_absolute()) return v;
    if (const char* root = std::getenv("UNIREC_DATA_ROOT")) {
      if (*root) return (std::filesystem::path(root) / p).string();
    }
    return v;
  }

  ModelConfig model_config() const {
    ModelConfig m;
    m.dim = u64("model.dim");
    m.heads = u64("model.heads");
    m.attn_hidden = u64("model.attn_hidden");
    m.title_len = u64("model.title_len");
    m.max_history = u64("model.max_history");
    m.word_position = flag("model.word_position");
    m.behavior_position = flag("model.behavior_position");
    m.top_renorm_linear = flag("model.top_renorm_linear");
    return m;
  }

  TrainConfig train_config() const {
    TrainConfig t;
    t.ranking_negatives = u64("train.k");
    t.recall_negatives = u64("train.t");
    t.basis_count = u64("train.m");
    t.top_p = u64("train.p");
    t.learning_rate = f64("train.lr");
    t.batch_size = u64("train.batch_size");
    t.max_epochs = u64("train.max_epochs");
    t.stage2_max_epochs = u64("train.stage2_max_epochs");
    t.stage2_steps_per_epoch = u64("train.stage2_steps_per_epoch");
    t.stage2_lr = f64("train.stage2_lr");
    t.patience = u64("train.patience");
    t.plateau_decay = f64("train.plateau_decay");
    t.seed = u64("seed");
    t.steps_per_epoch = u64("train.steps_per_epoch");
    t.valid_max_impressions = u64("train.valid_max_impressions");
    t.early_stop_recall_k = u64("train.early_stop_recall_k");
    t.freeze_user_encoder = flag("train.freeze_user_encoder");
    t.resample_each_epoch = flag("train.resample_each_epoch");
    t.validate();
    return t;
  }

  SyntheticSpec synthetic_spec() const {
    SyntheticSpec s;
    s.num_topics = u64("synth.topics");
    s.num_users = u64("synth.users");
    s.num_news = u64("synth.news");
    s.words_per_topic = u64("synth.words_per_topic");
    s.seed = u64("seed");
    s.subtopics_per_topic = u64("synth.subtopics");
    s.impressions_per_user = u64("synth.impressions_per_user");
    s.candidates_per_impression = u64("synth.candidates");
    s.max_clicks_per_impression = u64("synth.max_clicks");
    s.preferred_click_prob = f64("synth.preferred_prob");
    s.subtopic_word_frac = f64("synth.subtopic_word_frac");
    s.subtopic_click_prob = f64("synth.subtopic_prob");
    s.contamination = f64("synth.contamination");
    s.title_len_min = u64("synth.title_min");
    s.title_len_max = u64("synth.title_max");
    s.train_frac = f64("synth.train_frac");
    s.valid_frac = f64("synth.valid_frac");
    return s;
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
  }

  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> kDefaults = {
        {"seed", "42"},
        {"workers", "1"},
        {"run.dir", "runs/default"},
        {"data.news", ""},
        {"data.behaviors_train", ""},
        {"data.behaviors_valid", ""},
        {"data.behaviors_test", ""},
        {"data.valid_fraction", "0.1"},
        {"vocab.min_count", "1"},
        {"model.dim", "64"},
        {"model.heads", "4"},
        {"model.attn_hidden", "64"},
        {"model.title_len", "30"},
        {"model.max_history", "50"},
        {"model.word_position", "true"},
        {"model.behavior_position", "true"},
        {"model.top_renorm_linear", "false"},
        {"train.k", "4"},
        {"train.t", "200"},
        {"train.m", "20"},
        {"train.p", "5"},
        {"train.lr", "0.001"},
        {"train.batch_size", "32"},
        {"train.max_epochs", "10"},
        {"train.stage2_max_epochs", "0"},
        {"train.stage2_steps_per_epoch", "0"},
        {"train.stage2_lr", "0"},
        {"train.patience", "2"},
        {"train.plateau_decay", "1.0"},
        {"train.steps_per_epoch", "0"},
        {"train.valid_max_impressions", "0"},
        {"train.early_stop_recall_k", "100"},
        {"train.freeze_user_encoder", "true"},
        {"train.resample_each_epoch", "true"},
        {"eval.k_list", "100,200,500,1000"},
        {"bench.n_values", "10,50,200"},
        {"bench.m_values", "5,20,100"},
        {"bench.reps", "50"},
        {"synth.topics", "5"},
        {"synth.users", "2000"},
        {"synth.news", "3000"},
        {"synth.words_per_topic", "50"},
        {"synth.subtopics", "4"},
        {"synth.impressions_per_user", "30"},
        {"synth.candidates", "10"},
        {"synth.max_clicks", "2"},
        {"synth.preferred_prob", "0.9"},
        {"synth.subtopic_word_frac", "1.0"},
        {"synth.subtopic_prob", "0.95"},
        {"synth.contamination", "0.2"},
        {"synth.title_min", "4"},
        {"synth.title_max", "8"},
        {"synth.train_frac", "0.7"},
        {"synth.valid_frac", "0.1"},
    };
    return kDefaults;
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace unirec
