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
#include <cstring>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "unirec/adam.hpp"
#include "unirec/ops.hpp"
#include "unirec/tensor.hpp"

namespace unirec {
namespace {

TEST(Matmul, IdentityCase) {
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  Tensor y = matmul(Tensor::identity(2), a);
  EXPECT_EQ(y.vec(), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Matmul, ZeroCase) {
  Tensor y = matmul(Tensor::identity(2), Tensor::zeros({2, 3}));
  for (double v : y.vec()) EXPECT_EQ(v, 0.0);
}

TEST(Matmul, HandDotProduct) {
  Tensor a = Tensor::from_data({1, 2}, {1, 2});
  Tensor b = Tensor::from_data({2, 1}, {3, 4});
  EXPECT_DOUBLE_EQ(matmul(a, b).value(), 11.0);
}

TEST(Matmul, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})),
               DimensionError);
}

TEST(Matmul, AgreesWithNaiveOracle) {
  Rng rng(11);
  Tensor a = Tensor::uniform({5, 7}, rng, -2, 2);
  Tensor b = Tensor::uniform({7, 3}, rng, -2, 2);
  Tensor c = matmul(a, b);
  auto ref = oracles::naive_matmul(a.vec(), b.vec(), 5, 7, 3);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    EXPECT_NEAR(c.vec()[i], ref[i], 1e-12);
  }
}

TEST(Softmax, SymmetryAndSingleton) {
  Tensor y = softmax(Tensor::from_data({2}, {0, 0}));
  EXPECT_DOUBLE_EQ(y(0), 0.5);
  EXPECT_DOUBLE_EQ(y(1), 0.5);
  for (double c : {-3.0, 0.0, 17.5}) {
    EXPECT_DOUBLE_EQ(softmax(Tensor::from_data({1}, {c}))(0), 1.0);
  }
}

TEST(Softmax, ClosedFormLn2) {
  Tensor y = softmax(Tensor::from_data({2}, {std::log(2.0), 0.0}));
  EXPECT_NEAR(y(0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(y(1), 1.0 / 3.0, 1e-15);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor x = Tensor::uniform({9}, rng, -10, 10);
    Tensor y = softmax(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      EXPECT_GT(y(i), 0.0);
      s += y(i);
    }
    EXPECT_NEAR(s, 1.0, 1e-9);

    Tensor shifted = x.clone();
    const double c = rng.uniform(-5, 5);
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted(i) += c;
    Tensor y2 = softmax(shifted);
    for (std::size_t i = 0; i < y.size(); ++i) {
      EXPECT_NEAR(y(i), y2(i), 1e-12);
    }
  }
}

TEST(Softmax, EmptyInputThrows) {
  EXPECT_THROW(softmax(Tensor::zeros({0})), DimensionError);
}

TEST(Softmax, RowwiseOnMatrix) {
  Tensor x = Tensor::from_data({2, 2}, {0, 0, std::log(2.0), 0});
  Tensor y = softmax(x);
  EXPECT_DOUBLE_EQ(y(0, 0), 0.5);
  EXPECT_NEAR(y(1, 0), 2.0 / 3.0, 1e-15);
}

TEST(Logsumexp, ClosedForm) {
  EXPECT_NEAR(logsumexp(Tensor::from_data({2}, {0, 0})).value(), std::log(2.0),
              1e-15);
  // Stable far from the origin.
  EXPECT_NEAR(logsumexp(Tensor::from_data({2}, {1000.0, 1000.0})).value(),
              1000.0 + std::log(2.0), 1e-9);
}

TEST(Backward, SumGivesOnes) {
  Tensor p = Tensor::uniform({3, 2}, *std::make_unique<Rng>(3), -1, 1, true);
  backward(sum(p));
  for (double g : p.grad()) EXPECT_DOUBLE_EQ(g, 1.0);
}

TEST(Backward, DotSquareGradient) {
  Tensor p = Tensor::from_data({2}, {1, 2}, true);
  backward(dot(p, p));
  EXPECT_DOUBLE_EQ(p.grad()[0], 2.0);
  EXPECT_DOUBLE_EQ(p.grad()[1], 4.0);
}

TEST(Backward, NonScalarLossThrows) {
  Tensor p = Tensor::from_data({2}, {1, 2}, true);
  Tensor y = add(p, p);
  EXPECT_THROW(backward(y), DimensionError);
}

TEST(Backward, ReusedNodeAccumulates) {
  // loss = sum(p + p) -> grad 2 everywhere.
  Tensor p = Tensor::from_data({3}, {1, 2, 3}, true);
  backward(sum(add(p, p)));
  for (double g : p.grad()) EXPECT_DOUBLE_EQ(g, 2.0);
}

TEST(Backward, NoGradGuardStopsRecording) {
  Tensor p = Tensor::from_data({2}, {1, 2}, true);
  NoGradGuard ng;
  Tensor y = dot(p, p);
  EXPECT_FALSE(y.tracked());
}

TEST(FiniteDifference, LinearFunctionIsExact) {
  Rng rng(5);
  Tensor point = Tensor::uniform({6}, rng, -3, 3);
  double err = finite_difference_check(
      [](const Tensor& p) { return sum(p); }, point, 1e-4);
  EXPECT_LT(err, 1e-8);
}

TEST(FiniteDifference, SoftmaxHead) {
  Tensor point = Tensor::from_data({2}, {0, 0});
  double err = finite_difference_check(
      [](const Tensor& p) { return pick(softmax(p), 0); }, point, 1e-4);
  EXPECT_LT(err, 1e-6);
}

TEST(FiniteDifference, BadEpsThrows) {
  EXPECT_THROW(finite_difference_check(
                   [](const Tensor& p) { return sum(p); },
                   Tensor::zeros({2}), 0.0),
               NumericError);
}

// Every differentiable op passes a central finite-difference check at 10
// seeded random points.
TEST(FiniteDifference, AllOpsSweep) {
  struct Case {
    const char* name;
    Shape shape;
    std::function<Tensor(const Tensor&)> f;
  };
  Rng fixed(99);
  Tensor other_v = Tensor::uniform({4}, fixed, -1, 1);
  Tensor other_m = Tensor::uniform({4, 4}, fixed, -1, 1);
  Tensor other_m2 = Tensor::uniform({4, 3}, fixed, -1, 1);
  Tensor other_m34 = Tensor::uniform({3, 4}, fixed, -1, 1);
  MhsaParams mh = MhsaParams::init(4, fixed, false);

  std::vector<Case> cases = {
      {"add", {4}, [&](const Tensor& p) { return sum(add(p, other_v)); }},
      {"sub", {4}, [&](const Tensor& p) { return sum(sub(other_v, p)); }},
      {"mul", {4}, [&](const Tensor& p) { return sum(mul(p, other_v)); }},
      {"scale", {4}, [&](const Tensor& p) { return sum(scale(p, -2.5)); }},
      {"add_rowvec_x",
       {3, 4},
       [&](const Tensor& p) { return sum(tanh(add_rowvec(p, other_v))); }},
      {"add_rowvec_v",
       {4},
       [&](const Tensor& p) { return sum(tanh(add_rowvec(other_m, p))); }},
      {"matmul_a",
       {4, 4},
       [&](const Tensor& p) { return sum(tanh(matmul(p, other_m2))); }},
      {"matmul_b",
       {4, 3},
       [&](const Tensor& p) { return sum(tanh(matmul(other_m, p))); }},
      {"transpose", {3, 4}, [&](const Tensor& p) { return sum(tanh(transpose(p))); }},
      {"matvec_a",
       {4, 4},
       [&](const Tensor& p) { return sum(tanh(matvec(p, other_v))); }},
      {"matvec_x",
       {4},
       [&](const Tensor& p) { return sum(tanh(matvec(other_m, p))); }},
      {"vecmat_x",
       {4},
       [&](const Tensor& p) { return sum(tanh(vecmat(p, other_m))); }},
      {"vecmat_a",
       {4, 4},
       [&](const Tensor& p) { return sum(tanh(vecmat(other_v, p))); }},
      {"dot", {4}, [&](const Tensor& p) { return dot(p, p); }},
      {"reshape",
       {2, 6},
       [&](const Tensor& p) { return sum(tanh(reshape(p, {3, 4}))); }},
      {"gather_rows",
       {4, 4},
       [&](const Tensor& p) { return sum(tanh(gather_rows(p, {1, 1, 3}))); }},
      {"gather_elems",
       {4},
       [&](const Tensor& p) { return sum(tanh(gather_elems(p, {0, 0, 2}))); }},
      {"slice_rows",
       {4, 4},
       [&](const Tensor& p) { return sum(tanh(slice_rows(p, 1, 2))); }},
      {"concat_rows",
       {2, 4},
       [&](const Tensor& p) {
         return sum(tanh(concat_rows({p, other_m, p})));
       }},
      {"pick", {4}, [&](const Tensor& p) { return pick(tanh(p), 2); }},
      {"stack_scalars",
       {3},
       [&](const Tensor& p) {
         return sum(tanh(stack_scalars({pick(p, 0), pick(p, 2), pick(p, 1)})));
       }},
      {"mean", {5}, [&](const Tensor& p) { return mean(tanh(p)); }},
      {"tanh", {5}, [&](const Tensor& p) { return sum(tanh(p)); }},
      {"softmax_vec", {5}, [&](const Tensor& p) { return pick(softmax(p), 1); }},
      {"softmax_rows",
       {3, 4},
       [&](const Tensor& p) { return sum(mul(softmax(p), other_m34)); }},
      {"logsumexp", {5}, [&](const Tensor& p) { return logsumexp(p); }},
      {"div_by_x",
       {4},
       [&](const Tensor& p) { return sum(div_by(p, Tensor::scalar(1.7))); }},
      {"div_by_s",
       {},
       [&](const Tensor& p) { return sum(div_by(other_v, add(p, Tensor::scalar(2.0)))); }},
      {"attn_combine_w",
       {2, 2},
       [&](const Tensor& p) { return sum(tanh(attn_combine(p, other_m))); }},
      {"attn_combine_x",
       {4, 4},
       [&](const Tensor& p) {
         Tensor w = Tensor::from_data({2, 2}, {0.3, 0.7, -1.0, 2.0});
         return sum(tanh(attn_combine(w, p)));
       }},
      {"mhsa_x",
       {3, 4},
       [&](const Tensor& p) {
         return sum(tanh(multi_head_self_attention(p, mh, 2)));
       }},
  };

  for (const Case& c : cases) {
    for (int point = 0; point < 10; ++point) {
      Rng rng(1000 + 31 * point);
      Tensor x = Tensor::uniform(c.shape, rng, -1.5, 1.5);
      const double err = finite_difference_check(c.f, x, 1e-4);
      EXPECT_LT(err, 1e-3) << c.name << " at point " << point;
    }
  }
}

TEST(Determinism, ForwardIsBitIdentical) {
  auto run = [] {
    Rng rng(42);
    Tensor x = Tensor::uniform({6, 8}, rng, -1, 1);
    MhsaParams p = MhsaParams::init(8, rng);
    Tensor y = multi_head_self_attention(x, p, 2);
    return y.vec();
  };
  std::vector<double> a = run(), b = run();
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), a.size() * sizeof(double)));
}

TEST(Tensor, InvariantsAndErrors) {
  EXPECT_THROW(Tensor::from_data({3}, {1, 2}), DimensionError);
  Tensor t = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(t.size(), numel(t.shape()));
  EXPECT_TRUE(t.all_finite());
  t(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
}

}  // namespace
}  // namespace unirec
