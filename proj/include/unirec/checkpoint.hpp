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

#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "unirec/corpus.hpp"
#include "unirec/model.hpp"

namespace unirec {

// Self-describing checkpoint container: header with stage and architecture,
// then named parameter tensors as little-endian 64-bit float payloads.
// Round trip is bit-exact.

struct Checkpoint {
  std::uint32_t stage = 1;
  std::uint64_t config_hash = 0;
  std::size_t memory_count = 0;  // M, 0 when the memory is absent
  RankingModel model;
  BasisMemory memory;                 // valid when memory_count > 0
  std::vector<std::string> history;   // one metrics line per epoch
};

// FNV-1a over the architecture fields; detects incompatible checkpoints.
inline std::uint64_t arch_hash(const ModelConfig& c, std::size_t memory_count) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  mix(c.dim);
  mix(c.heads);
  mix(c.attn_hidden);
  mix(c.title_len);
  mix(c.max_history);
  mix(c.word_position ? 1 : 0);
  mix(c.behavior_position ? 1 : 0);
  mix(c.vocab_size);
  mix(memory_count);
  return h;
}

namespace ckptio {

inline void put_f64(std::ostream& out, double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, 8);
  cacheio::put_u64(out, u);
}

inline double get_f64(std::istream& in) {
  const std::uint64_t u = cacheio::get_u64(in);
  double d;
  std::memcpy(&d, &u, 8);
  return d;
}

inline void put_tensor(std::ostream& out, const std::string& name,
                       const Tensor& t) {
  cacheio::put_str(out, name);
  cacheio::put_u64(out, t.ndim());
  for (std::size_t d : t.shape()) cacheio::put_u64(out, d);
  for (std::size_t i = 0; i < t.size(); ++i) put_f64(out, t.data()[i]);
}

inline std::pair<std::string, Tensor> get_tensor(std::istream& in) {
  std::string name = cacheio::get_str(in);
  const std::uint64_t ndim = cacheio::get_u64(in);
  if (ndim > 4) throw CompatibilityError("checkpoint: implausible tensor rank");
  Shape shape(ndim);
  for (std::uint64_t i = 0; i < ndim; ++i) shape[i] = cacheio::get_u64(in);
  std::vector<double> data(numel(shape));
  for (double& v : data) v = get_f64(in);
  return {std::move(name),
          Tensor::from_data(std::move(shape), std::move(data), true)};
}

}  // namespace ckptio

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write("UNRC", 4);
  cacheio::put_u64(out, 1);  // format version
  cacheio::put_u64(out, ckpt.stage);
  cacheio::put_u64(out, ckpt.config_hash);
  const ModelConfig& c = ckpt.model.cfg;
  cacheio::put_u64(out, c.dim);
  cacheio::put_u64(out, c.heads);
  cacheio::put_u64(out, c.attn_hidden);
  cacheio::put_u64(out, c.title_len);
  cacheio::put_u64(out, c.max_history);
  cacheio::put_u64(out, c.word_position ? 1 : 0);
  cacheio::put_u64(out, c.behavior_position ? 1 : 0);
  cacheio::put_u64(out, c.top_renorm_linear ? 1 : 0);
  cacheio::put_u64(out, c.vocab_size);
  cacheio::put_u64(out, ckpt.memory_count);

  std::vector<std::pair<std::string, Tensor>> params =
      ckpt.model.named_parameters();
  if (ckpt.memory_count > 0) {
    for (auto& p : ckpt.memory.named_parameters()) params.push_back(p);
  }
  cacheio::put_u64(out, params.size());
  for (const auto& [name, t] : params) ckptio::put_tensor(out, name, t);
  cacheio::put_u64(out, ckpt.history.size());
  for (const std::string& line : ckpt.history) cacheio::put_str(out, line);
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "UNRC") {
    throw CompatibilityError("checkpoint: bad magic in " + path);
  }
  if (cacheio::get_u64(in) != 1) {
    throw CompatibilityError("checkpoint: unsupported format version");
  }
  Checkpoint ckpt;
  ckpt.stage = static_cast<std::uint32_t>(cacheio::get_u64(in));
  ckpt.config_hash = cacheio::get_u64(in);
  ModelConfig cfg;
  cfg.dim = cacheio::get_u64(in);
  cfg.heads = cacheio::get_u64(in);
  cfg.attn_hidden = cacheio::get_u64(in);
  cfg.title_len = cacheio::get_u64(in);
  cfg.max_history = cacheio::get_u64(in);
  cfg.word_position = cacheio::get_u64(in) != 0;
  cfg.behavior_position = cacheio::get_u64(in) != 0;
  cfg.top_renorm_linear = cacheio::get_u64(in) != 0;
  cfg.vocab_size = cacheio::get_u64(in);
  ckpt.memory_count = cacheio::get_u64(in);

  const std::uint64_t nparams = cacheio::get_u64(in);
  std::map<std::string, Tensor> loaded;
  for (std::uint64_t i = 0; i < nparams; ++i) {
    auto [name, t] = ckptio::get_tensor(in);
    loaded.emplace(std::move(name), std::move(t));
  }
  const std::uint64_t nhist = cacheio::get_u64(in);
  for (std::uint64_t i = 0; i < nhist; ++i) {
    ckpt.history.push_back(cacheio::get_str(in));
  }

  auto take = [&loaded, &path](const std::string& name) {
    auto it = loaded.find(name);
    if (it == loaded.end()) {
      throw CompatibilityError("checkpoint " + path + ": missing tensor " + name);
    }
    return it->second;
  };
  RankingModel& m = ckpt.model;
  m.cfg = cfg;
  m.word_emb = take("word_emb");
  m.word_pos = take("word_pos");
  m.behavior_pos = take("behavior_pos");
  m.news_attn = {take("news_attn.wq"), take("news_attn.wk"),
                 take("news_attn.wv"), take("news_attn.wo")};
  m.news_pool = {take("news_pool.w"), take("news_pool.b"), take("news_pool.q")};
  m.user_attn = {take("user_attn.wq"), take("user_attn.wk"),
                 take("user_attn.wv"), take("user_attn.wo")};
  m.user_pool = {take("user_pool.w"), take("user_pool.b"), take("user_pool.q")};
  m.cold_start = take("cold_start");
  if (ckpt.memory_count > 0) {
    ckpt.memory.keys = take("memory.keys");
    ckpt.memory.values = take("memory.values");
    if (ckpt.memory.keys.rows() != ckpt.memory_count) {
      throw CompatibilityError("checkpoint: memory count mismatch");
    }
  }
  if (ckpt.config_hash != arch_hash(cfg, ckpt.memory_count)) {
    throw CompatibilityError("checkpoint: config hash mismatch");
  }
  return ckpt;
}

// Guard for callers that need a checkpoint matching their own configuration.
inline void verify_compatible(const Checkpoint& ckpt, const ModelConfig& cfg,
                              std::optional<std::size_t> memory_count = {}) {
  const std::size_t m = memory_count.value_or(ckpt.memory_count);
  if (ckpt.config_hash != arch_hash(cfg, m) || ckpt.memory_count != m) {
    throw CompatibilityError("checkpoint incompatible with configuration");
  }
}

}  // namespace unirec
