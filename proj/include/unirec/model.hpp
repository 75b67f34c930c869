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
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "unirec/corpus.hpp"
#include "unirec/ops.hpp"

namespace unirec {

// The unified user model: a news encoder and a ranking user encoder (both
// multi-head self-attention followed by additive attention pooling), plus a
// basis-embedding memory that turns the ranking user embedding into a recall
// user embedding.

struct ModelConfig {
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t attn_hidden = 64;  // additive pooling hidden width
  std::size_t title_len = 30;
  std::size_t max_history = 50;
  bool word_position = true;
  bool behavior_position = true;
  // Non-standard variant of the top-P re-normalization that renormalizes the
  // selected weights proportionally instead of passing them through exp.
  bool top_renorm_linear = false;
  std::size_t vocab_size = 0;

  void validate() const {
    if (dim == 0 || heads == 0 || dim % heads != 0) {
      throw ConfigError("model: dim must be a positive multiple of heads");
    }
    if (attn_hidden == 0 || title_len == 0 || max_history == 0) {
      throw ConfigError("model: attn_hidden, title_len, max_history must be positive");
    }
    if (vocab_size < 2) {
      throw ConfigError("model: vocab_size must cover pad and unk");
    }
  }
};

// Additive attention pooling: softmax_i( q . tanh(x_i W + b) ) over rows.
struct AttnPoolParams {
  Tensor w;  // d x hidden
  Tensor b;  // {hidden}
  Tensor q;  // {hidden}

  static AttnPoolParams init(std::size_t dim, std::size_t hidden, Rng& rng) {
    const double bd = 1.0 / std::sqrt(static_cast<double>(dim));
    const double bh = 1.0 / std::sqrt(static_cast<double>(hidden));
    AttnPoolParams p;
    p.w = Tensor::uniform({dim, hidden}, rng, -bd, bd, true);
    p.b = Tensor::uniform({hidden}, rng, -bh, bh, true);
    p.q = Tensor::uniform({hidden}, rng, -bh, bh, true);
    return p;
  }
};

struct RankingModel {
  ModelConfig cfg;
  Tensor word_emb;      // vocab x d
  Tensor word_pos;      // title_len x d
  Tensor behavior_pos;  // max_history x d
  MhsaParams news_attn;
  AttnPoolParams news_pool;
  MhsaParams user_attn;
  AttnPoolParams user_pool;
  Tensor cold_start;  // {d}, substitutes for an empty click history

  static RankingModel init(ModelConfig cfg, Rng& rng) {
    cfg.validate();
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
    RankingModel m;
    m.cfg = cfg;
    m.word_emb = Tensor::uniform({cfg.vocab_size, cfg.dim}, rng, -bound, bound, true);
    m.word_pos = Tensor::uniform({cfg.title_len, cfg.dim}, rng, -bound, bound, true);
    m.behavior_pos =
        Tensor::uniform({cfg.max_history, cfg.dim}, rng, -bound, bound, true);
    m.news_attn = MhsaParams::init(cfg.dim, rng);
    m.news_pool = AttnPoolParams::init(cfg.dim, cfg.attn_hidden, rng);
    m.user_attn = MhsaParams::init(cfg.dim, rng);
    m.user_pool = AttnPoolParams::init(cfg.dim, cfg.attn_hidden, rng);
    m.cold_start = Tensor::uniform({cfg.dim}, rng, -bound, bound, true);
    return m;
  }

  std::vector<std::pair<std::string, Tensor>> named_parameters() const {
    return {
        {"word_emb", word_emb},
        {"word_pos", word_pos},
        {"behavior_pos", behavior_pos},
        {"news_attn.wq", news_attn.wq},
        {"news_attn.wk", news_attn.wk},
        {"news_attn.wv", news_attn.wv},
        {"news_attn.wo", news_attn.wo},
        {"news_pool.w", news_pool.w},
        {"news_pool.b", news_pool.b},
        {"news_pool.q", news_pool.q},
        {"user_attn.wq", user_attn.wq},
        {"user_attn.wk", user_attn.wk},
        {"user_attn.wv", user_attn.wv},
        {"user_attn.wo", user_attn.wo},
        {"user_pool.w", user_pool.w},
        {"user_pool.b", user_pool.b},
        {"user_pool.q", user_pool.q},
        {"cold_start", cold_start},
    };
  }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
  }

  void set_requires_grad(bool on) {
    for (auto& [name, t] : named_parameters()) {
      Tensor tt = t;
      tt.set_requires_grad(on);
    }
  }
};

// M basis user embeddings (values) with separate attention keys.
struct BasisMemory {
  Tensor keys;    // M x d, the attention keys
  Tensor values;  // M x d, the basis user embeddings

  static BasisMemory init(std::size_t count, std::size_t dim, Rng& rng) {
    if (count < 1) throw ConfigError("basis memory: M must be >= 1");
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    BasisMemory m;
    m.keys = Tensor::uniform({count, dim}, rng, -bound, bound, true);
    m.values = Tensor::uniform({count, dim}, rng, -bound, bound, true);
    return m;
  }

  std::size_t count() const { return keys.rows(); }
  std::size_t dim() const { return keys.cols(); }

  std::vector<std::pair<std::string, Tensor>> named_parameters() const {
    return {{"memory.keys", keys}, {"memory.values", values}};
  }
};

struct AttentionWeights {
  Tensor alpha;                        // probability vector over the M slots
  std::vector<std::size_t> selected;   // top-P slot indices when applicable
};

// ---------------------------------------------------------------------------
// News tower
// ---------------------------------------------------------------------------

// Encode a batch of fixed-length token sequences into one embedding per
// title: word embeddings (+ positions) -> self-attention -> pooling.
inline Tensor encode_news_batch(const RankingModel& m,
                                const std::vector<const std::vector<int>*>& titles) {
  if (titles.empty()) throw DimensionError("encode_news_batch: no titles");
  const std::size_t batch = titles.size(), len = m.cfg.title_len;
  std::vector<std::size_t> ids;
  ids.reserve(batch * len);
  for (const std::vector<int>* t : titles) {
    if (t->size() != len) {
      throw InputError("encode_news: title length " + std::to_string(t->size()) +
                       " != configured " + std::to_string(len));
    }
    for (int tok : *t) {
      if (tok < 0 || static_cast<std::size_t>(tok) >= m.cfg.vocab_size) {
        throw InputError("encode_news: token id " + std::to_string(tok) +
                         " outside vocab of " + std::to_string(m.cfg.vocab_size));
      }
      ids.push_back(static_cast<std::size_t>(tok));
    }
  }
  Tensor x = gather_rows(m.word_emb, ids);
  if (m.cfg.word_position) {
    std::vector<std::size_t> pos(batch * len);
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i % len;
    x = add(x, gather_rows(m.word_pos, pos));
  }
  x = mhsa_batched(x, m.news_attn, batch, len, m.cfg.heads);
  Tensor hidden = tanh(add_rowvec(matmul(x, m.news_pool.w), m.news_pool.b));
  Tensor scores = reshape(matvec(hidden, m.news_pool.q), {batch, len});
  return attn_combine(softmax(scores), x);
}

inline Tensor encode_news(const RankingModel& m, const std::vector<int>& tokens) {
  return reshape(encode_news_batch(m, {&tokens}), {m.cfg.dim});
}

// ---------------------------------------------------------------------------
// User tower (ranking)
// ---------------------------------------------------------------------------

// history_embs holds one row per clicked news, oldest first, at most
// max_history rows. An empty history yields the learned cold-start vector.
inline Tensor encode_user_rank(const RankingModel& m, const Tensor& history_embs) {
  if (!history_embs.defined() || history_embs.size() == 0 ||
      history_embs.rows() == 0) {
    return reshape(m.cold_start, {m.cfg.dim});
  }
  const std::size_t n = history_embs.rows();
  if (history_embs.cols() != m.cfg.dim) {
    throw DimensionError("encode_user_rank: embedding dim mismatch");
  }
  if (n > m.cfg.max_history) {
    throw DimensionError("encode_user_rank: history of " + std::to_string(n) +
                         " exceeds max_history " +
                         std::to_string(m.cfg.max_history));
  }
  Tensor x = history_embs;
  if (m.cfg.behavior_position) {
    x = add(x, slice_rows(m.behavior_pos, 0, n));
  }
  x = mhsa_batched(x, m.user_attn, 1, n, m.cfg.heads);
  Tensor hidden = tanh(add_rowvec(matmul(x, m.user_pool.w), m.user_pool.b));
  Tensor scores = reshape(matvec(hidden, m.user_pool.q), {1, n});
  return reshape(attn_combine(softmax(scores), x), {m.cfg.dim});
}

// Click probability score: plain inner product.
inline Tensor rank_score(const Tensor& u_ra, const Tensor& r_candidate) {
  return dot(u_ra, r_candidate);
}

// ---------------------------------------------------------------------------
// Recall synthesis
// ---------------------------------------------------------------------------

// alpha_i = exp(u_ra . w_i) / sum_j exp(u_ra . w_j), unscaled logits.
inline AttentionWeights basis_attention(const Tensor& u_ra,
                                        const BasisMemory& memory) {
  return {softmax(matvec(memory.keys, u_ra)), {}};
}

// u_re = sum_i alpha_i v_i over all M slots.
inline Tensor compose_recall_all(const AttentionWeights& aw,
                                 const BasisMemory& memory) {
  return vecmat(aw.alpha, memory.values);
}

// Indices of the P largest alpha entries, ties broken by lower index,
// returned in descending-weight order.
inline std::vector<std::size_t> top_p_indices(const Tensor& alpha, std::size_t p) {
  if (p < 1 || p > alpha.size()) {
    throw ConfigError("top_p_indices: P = " + std::to_string(p) +
                      " outside [1, " + std::to_string(alpha.size()) + "]");
  }
  std::vector<std::size_t> order(alpha.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return alpha(a) > alpha(b);
  });
  order.resize(p);
  return order;
}

struct TopCompose {
  Tensor u_re;      // {d}
  Tensor weights;   // {P}, re-normalized
  std::vector<std::size_t> indices;
};

// Test-phase composition from the top-P slots. The re-normalization passes
// the selected attention weights themselves through a softmax:
//   alpha'_ti = exp(alpha_ti) / sum_j exp(alpha_tj)
// i.e. probabilities are exponentiated, not logits. A linear re-scaling
// (alpha_ti / sum_j alpha_tj) is available behind top_renorm_linear.
inline TopCompose compose_recall_top(const AttentionWeights& aw,
                                     const BasisMemory& memory, std::size_t p,
                                     bool renorm_linear = false) {
  TopCompose out;
  out.indices = top_p_indices(aw.alpha, p);
  Tensor sel = gather_elems(aw.alpha, out.indices);
  out.weights = renorm_linear ? div_by(sel, sum(sel)) : softmax(sel);
  out.u_re = vecmat(out.weights, gather_rows(memory.values, out.indices));
  return out;
}

// Recall relevance score: inner product in the shared embedding space.
inline Tensor recall_score(const Tensor& u_re, const Tensor& r_candidate) {
  return dot(u_re, r_candidate);
}

// Plain mean of history embeddings (average-pooling recall baseline).
inline Tensor average_pool_user(const RankingModel& m, const Tensor& history_embs) {
  if (!history_embs.defined() || history_embs.size() == 0 ||
      history_embs.rows() == 0) {
    return reshape(m.cold_start, {m.cfg.dim});
  }
  const std::size_t n = history_embs.rows();
  Tensor w = Tensor::full({n}, 1.0 / static_cast<double>(n));
  return vecmat(w, history_embs);
}

// ---------------------------------------------------------------------------
// Corpus-level helpers
// ---------------------------------------------------------------------------

// Forward-only embedding of every article; rows align with corpus indices.
inline Tensor encode_news_pool(const RankingModel& m, const Corpus& corpus,
                               std::size_t chunk = 512) {
  NoGradGuard ng;
  if (corpus.title_len != m.cfg.title_len) {
    throw ConfigError("encode_news_pool: corpus tokenized to " +
                      std::to_string(corpus.title_len) + ", model expects " +
                      std::to_string(m.cfg.title_len));
  }
  Tensor pool = Tensor::zeros({corpus.size(), m.cfg.dim});
  std::vector<const std::vector<int>*> batch;
  for (std::size_t start = 0; start < corpus.size(); start += chunk) {
    const std::size_t stop = std::min(corpus.size(), start + chunk);
    batch.clear();
    for (std::size_t i = start; i < stop; ++i) {
      batch.push_back(&corpus.articles[i].title_tokens);
    }
    Tensor embs = encode_news_batch(m, batch);
    std::copy(embs.data(), embs.data() + embs.size(),
              pool.data() + start * m.cfg.dim);
  }
  return pool;
}

// Last max_history clicks as rows of the pool matrix (constant w.r.t. autodiff).
inline Tensor history_matrix(const Tensor& pool, const std::vector<int>& history,
                             std::size_t max_history) {
  const std::size_t n = std::min(history.size(), max_history);
  if (n == 0) return Tensor();
  std::vector<std::size_t> idx(n);
  const std::size_t start = history.size() - n;
  for (std::size_t i = 0; i < n; ++i) {
    idx[i] = static_cast<std::size_t>(history[start + i]);
  }
  NoGradGuard ng;
  return gather_rows(pool, idx);
}

}  // namespace unirec
