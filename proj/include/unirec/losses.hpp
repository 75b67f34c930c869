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

#include <vector>

#include "unirec/ops.hpp"

namespace unirec {

// Contrastive loss over a score vector with the positive in slot 0:
//   -log( exp(s0) / sum_i exp(si) ) = logsumexp(s) - s0
// The logsumexp form is stabilized by max subtraction.
inline Tensor contrastive_loss(const Tensor& scores) {
  if (scores.ndim() != 1 || scores.size() < 2) {
    throw DimensionError("contrastive_loss: need positive plus negatives");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores.data()[i])) {
      throw NumericError("contrastive_loss: non-finite score");
    }
  }
  return sub(logsumexp(scores), pick(scores, 0));
}

// Ranking objective: positive click score against K in-impression negatives.
inline Tensor ranking_loss(const Tensor& positive_score,
                           const std::vector<Tensor>& negative_scores) {
  if (negative_scores.empty()) {
    throw DimensionError("ranking_loss: K must be >= 1");
  }
  std::vector<Tensor> all;
  all.reserve(negative_scores.size() + 1);
  all.push_back(positive_score);
  for (const Tensor& s : negative_scores) all.push_back(s);
  return contrastive_loss(stack_scalars(all));
}

// Recall objective: same contrastive form with T corpus-wide negatives.
inline Tensor recall_loss(const Tensor& positive_score,
                          const std::vector<Tensor>& negative_scores) {
  if (negative_scores.empty()) {
    throw DimensionError("recall_loss: T must be >= 1");
  }
  return ranking_loss(positive_score, negative_scores);
}

}  // namespace unirec
