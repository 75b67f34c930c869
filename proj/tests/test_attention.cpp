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

#include <cmath>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "unirec/ops.hpp"

namespace unirec {
namespace {

TEST(Mhsa, SinglePositionAttendsToItself) {
  Rng rng(1);
  Tensor seq = Tensor::uniform({1, 4}, rng, -1, 1);
  MhsaParams p = MhsaParams::init(4, rng);
  auto probs = mhsa_attention_probs(seq, p, 2);
  ASSERT_EQ(probs.size(), 2u);
  for (const auto& head : probs) {
    ASSERT_EQ(head.size(), 1u);
    EXPECT_DOUBLE_EQ(head[0], 1.0);
  }
  // Output is a plain linear function of the single input row.
  Tensor y = multi_head_self_attention(seq, p, 2);
  Tensor expected = matmul(matmul(seq, p.wv), p.wo);
  for (std::size_t i = 0; i < y.size(); ++i) {
    EXPECT_NEAR(y.vec()[i], expected.vec()[i], 1e-12);
  }
}

TEST(Mhsa, PermutationEquivariance) {
  Rng rng(2);
  const std::size_t len = 4, d = 6;
  Tensor seq = Tensor::uniform({len, d}, rng, -1, 1);
  MhsaParams p = MhsaParams::init(d, rng);
  Tensor y = multi_head_self_attention(seq, p, 3);

  const std::vector<std::size_t> perm = {2, 0, 3, 1};
  Tensor permuted = gather_rows(seq, perm);
  Tensor y_perm = multi_head_self_attention(permuted, p, 3);
  for (std::size_t r = 0; r < len; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      EXPECT_NEAR(y_perm(r, c), y(perm[r], c), 1e-12);
    }
  }
}

TEST(Mhsa, MatchesScalarLoopOracle) {
  Rng rng(3);
  const std::size_t len = 3, d = 4, heads = 2;
  Tensor seq = Tensor::uniform({len, d}, rng, -1, 1);
  MhsaParams p = MhsaParams::init(d, rng);
  Tensor y = multi_head_self_attention(seq, p, heads);
  auto ref = oracles::naive_mhsa(seq.vec(), len, d, heads, p.wq.vec(),
                                 p.wk.vec(), p.wv.vec(), p.wo.vec());
  ASSERT_EQ(y.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    EXPECT_NEAR(y.vec()[i], ref[i], 1e-12);
  }
}

TEST(Mhsa, IdentityProjectionsReduceToSdpa) {
  Rng rng(4);
  for (std::size_t len : {1u, 2u, 4u}) {
    for (std::size_t d : {2u, 8u}) {
      Tensor seq = Tensor::uniform({len, d}, rng, -1, 1);
      MhsaParams p;
      p.wq = Tensor::identity(d);
      p.wk = Tensor::identity(d);
      p.wv = Tensor::identity(d);
      p.wo = Tensor::identity(d);
      Tensor y = multi_head_self_attention(seq, p, 1);
      auto ref = oracles::naive_sdpa(seq.vec(), len, d);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_NEAR(y.vec()[i], ref[i], 1e-12);
      }
    }
  }
}

TEST(Mhsa, HeadCountMustDivideDim) {
  Rng rng(5);
  Tensor seq = Tensor::uniform({2, 6}, rng, -1, 1);
  MhsaParams p = MhsaParams::init(6, rng);
  EXPECT_THROW(multi_head_self_attention(seq, p, 4), ConfigError);
  EXPECT_THROW(multi_head_self_attention(seq, p, 0), ConfigError);
}

TEST(Mhsa, BatchedMatchesPerSequence) {
  Rng rng(6);
  const std::size_t batch = 3, len = 5, d = 8, heads = 2;
  MhsaParams p = MhsaParams::init(d, rng);
  std::vector<Tensor> seqs;
  for (std::size_t b = 0; b < batch; ++b) {
    seqs.push_back(Tensor::uniform({len, d}, rng, -1, 1));
  }
  Tensor stacked = concat_rows(seqs);
  Tensor y = mhsa_batched(stacked, p, batch, len, heads);
  for (std::size_t b = 0; b < batch; ++b) {
    Tensor yb = multi_head_self_attention(seqs[b], p, heads);
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        EXPECT_NEAR(y(b * len + i, j), yb(i, j), 1e-12);
      }
    }
  }
}

TEST(Mhsa, GradientsForAllParameters) {
  Rng rng(7);
  const std::size_t len = 3, d = 4, heads = 2;
  Tensor seq = Tensor::uniform({len, d}, rng, -1, 1);
  MhsaParams p = MhsaParams::init(d, rng, false);

  auto check_param = [&](Tensor MhsaParams::*member, const char* name) {
    for (int point = 0; point < 10; ++point) {
      Rng prng(500 + point);
      Tensor start = Tensor::uniform({d, d}, prng, -0.8, 0.8);
      auto f = [&](const Tensor& w) {
        MhsaParams q = p;
        q.*member = w;
        return sum(tanh(multi_head_self_attention(seq, q, heads)));
      };
      EXPECT_LT(finite_difference_check(f, start, 1e-4), 1e-3)
          << name << " point " << point;
    }
  };
  check_param(&MhsaParams::wq, "wq");
  check_param(&MhsaParams::wk, "wk");
  check_param(&MhsaParams::wv, "wv");
  check_param(&MhsaParams::wo, "wo");
}

}  // namespace
}  // namespace unirec
