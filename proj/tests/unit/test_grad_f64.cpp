// Copyright 2026 The AdvSeq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Gradient checks for every differentiable op, on the 64-bit core.

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "common/error.h"
#include "grad/ops.h"
#include "support/fd_check.h"

namespace advseq {
namespace {

using testing::check_gradients;
using testing::project;
using testing::random_leaf;
using Leaves = std::vector<Tensor>;

static_assert(sizeof(Real) == 8, "gradient checks need the 64-bit core");

constexpr double kOpTol = 1e-4;
constexpr double kTightTol = 1e-5;

TEST(GradF64, Matmul) {
  Rng rng(1);
  auto r = check_gradients([](const Leaves& l) { return sum(matmul(l[0], l[1])); },
                           {random_leaf({3, 4}, rng), random_leaf({4, 2}, rng)});
  EXPECT_LE(r.max_rel_error, kTightTol);
  auto p = check_gradients([](const Leaves& l) { return project(matmul(l[0], l[1]), 7); },
                           {random_leaf({2, 5}, rng), random_leaf({5, 3}, rng)});
  EXPECT_LE(p.max_rel_error, kTightTol);
}

TEST(GradF64, Affine) {
  Rng rng(2);
  auto r = check_gradients([](const Leaves& l) { return project(affine(l[0], l[1], l[2]), 3); },
                           {random_leaf({4, 3}, rng), random_leaf({3, 5}, rng), random_leaf({5}, rng)});
  EXPECT_LE(r.max_rel_error, kOpTol);
}

TEST(GradF64, AddSameShapeAndBroadcast) {
  Rng rng(3);
  auto same = check_gradients([](const Leaves& l) { return project(add(l[0], l[1]), 1); },
                              {random_leaf({3, 4}, rng), random_leaf({3, 4}, rng)});
  EXPECT_LE(same.max_rel_error, kOpTol);
  auto bcast = check_gradients([](const Leaves& l) { return project(add(l[0], l[1]), 2); },
                               {random_leaf({5, 4}, rng), random_leaf({4}, rng)});
  EXPECT_LE(bcast.max_rel_error, kOpTol);
}

TEST(GradF64, ScaleReluReshape) {
  Rng rng(4);
  // Keep inputs away from the relu kink so differences stay on one side.
  auto x = random_leaf({4, 3}, rng);
  for (auto& v : x.data()) v = v < 0 ? v - 0.1 : v + 0.1;
  auto r = check_gradients(
      [](const Leaves& l) { return project(reshape(relu(scale(l[0], -1.7)), {3, 4}), 5); }, {x});
  EXPECT_LE(r.max_rel_error, kOpTol);
}

TEST(GradF64, SumAndMean) {
  Rng rng(5);
  auto s = check_gradients([](const Leaves& l) { return sum(l[0]); }, {random_leaf({2, 3}, rng)});
  EXPECT_LE(s.max_rel_error, kOpTol);
  auto m = check_gradients([](const Leaves& l) { return mean(l[0]); }, {random_leaf({2, 3}, rng)});
  EXPECT_LE(m.max_rel_error, kOpTol);
}

TEST(GradF64, SoftmaxAndLogSoftmax) {
  Rng rng(6);
  for (int axis : {0, 1, -1}) {
    auto s = check_gradients([axis](const Leaves& l) { return project(softmax(l[0], axis), 9); },
                             {random_leaf({3, 5}, rng, -2, 2)});
    EXPECT_LE(s.max_rel_error, kOpTol) << "axis " << axis;
    auto ls = check_gradients([axis](const Leaves& l) { return project(log_softmax(l[0], axis), 4); },
                              {random_leaf({3, 5}, rng, -2, 2)});
    EXPECT_LE(ls.max_rel_error, kOpTol) << "axis " << axis;
  }
}

TEST(GradF64, LayerNorm) {
  Rng rng(7);
  auto r = check_gradients([](const Leaves& l) { return project(layer_norm(l[0], l[1], l[2]), 11); },
                           {random_leaf({4, 6}, rng), random_leaf({6}, rng), random_leaf({6}, rng)});
  EXPECT_LE(r.max_rel_error, kOpTol);
}

TEST(GradF64, Concat) {
  Rng rng(8);
  auto rows = check_gradients([](const Leaves& l) { return project(concat({l[0], l[1]}, 0), 2); },
                              {random_leaf({2, 3}, rng), random_leaf({4, 3}, rng)});
  EXPECT_LE(rows.max_rel_error, kOpTol);
  auto cols = check_gradients([](const Leaves& l) { return project(concat({l[0], l[1]}, 1), 3); },
                              {random_leaf({3, 2}, rng), random_leaf({3, 5}, rng)});
  EXPECT_LE(cols.max_rel_error, kOpTol);
}

TEST(GradF64, GatherRowsAccumulatesRepeats) {
  Rng rng(9);
  std::vector<TokenId> ids{4, 1, 4, 0, 4};
  auto r = check_gradients([&](const Leaves& l) { return project(gather_rows(l[0], ids), 6); },
                           {random_leaf({6, 3}, rng)});
  EXPECT_LE(r.max_rel_error, kOpTol);
  std::vector<std::int64_t> rows{2, 2, 5};
  auto q = check_gradients([&](const Leaves& l) { return project(gather_rows(l[0], rows), 8); },
                           {random_leaf({6, 3}, rng)});
  EXPECT_LE(q.max_rel_error, kOpTol);
}

TEST(GradF64, CrossEntropyMeanWeightedAndPadded) {
  Rng rng(10);
  std::vector<TokenId> targets{2, 0, 4, 1};  // row 1 is padding
  auto mean_ce = check_gradients([&](const Leaves& l) { return cross_entropy(l[0], targets, kPadId); },
                                 {random_leaf({4, 5}, rng, -3, 3)});
  EXPECT_LE(mean_ce.max_rel_error, kTightTol);
  std::vector<Real> w{0.5, 1.0, 0.25, 2.0};
  auto weighted = check_gradients(
      [&](const Leaves& l) { return cross_entropy(l[0], targets, kPadId, w); },
      {random_leaf({4, 5}, rng, -3, 3)});
  EXPECT_LE(weighted.max_rel_error, kTightTol);
}

TEST(GradF64, DropoutWithFixedMask) {
  Rng rng(11);
  auto r = check_gradients(
      [](const Leaves& l) {
        Rng mask_rng(99);  // same mask on every evaluation
        return project(dropout(l[0], 0.3, mask_rng), 12);
      },
      {random_leaf({5, 4}, rng)});
  EXPECT_LE(r.max_rel_error, kOpTol);
}

TEST(GradF64, AttentionPackedSegments) {
  Rng rng(12);
  SegmentLayout q_layout{{0, 3}, {3, 2}};
  SegmentLayout k_layout{{0, 4}, {4, 1}};
  for (bool causal : {false}) {
    auto r = check_gradients(
        [&](const Leaves& l) { return project(attention(l[0], l[1], l[2], q_layout, k_layout, 2, causal), 5); },
        {random_leaf({5, 4}, rng), random_leaf({5, 4}, rng), random_leaf({5, 4}, rng)});
    EXPECT_LE(r.max_rel_error, kOpTol);
  }
  SegmentLayout self{{0, 3}, {3, 4}};
  auto c = check_gradients(
      [&](const Leaves& l) { return project(attention(l[0], l[1], l[2], self, self, 2, true), 6); },
      {random_leaf({7, 4}, rng), random_leaf({7, 4}, rng), random_leaf({7, 4}, rng)});
  EXPECT_LE(c.max_rel_error, kOpTol);
}

TEST(GradF64, ComposedExpression) {
  Rng rng(13);
  // A shared leaf used twice: gradients must add up across both uses.
  auto r = check_gradients(
      [](const Leaves& l) {
        Tensor h = layer_norm(affine(l[0], l[1], l[2]), l[3], l[4]);
        Tensor mixed = add(softmax(matmul(h, l[1]), -1), l[0]);
        return cross_entropy(mixed, std::vector<TokenId>{1, 2, 0}, kPadId);
      },
      {random_leaf({3, 3}, rng), random_leaf({3, 3}, rng), random_leaf({3}, rng),
       random_leaf({3}, rng), random_leaf({3}, rng)});
  EXPECT_LE(r.max_rel_error, kOpTol);
}

TEST(GradF64, SumOfEmbeddingRowGivesOnes) {
  Tensor e = Tensor::from({1, 4}, {0.3, -1.0, 2.0, 0.1}, true);
  Tape tape;
  {
    TapeScope scope(tape);
    backward(sum(e));
  }
  for (Real g : e.grad()) EXPECT_EQ(g, 1.0);
}

TEST(GradF64, ZeroTimesFunctionGivesZeroGradient) {
  Rng rng(14);
  auto x = random_leaf({2, 3}, rng);
  Tape tape;
  {
    TapeScope scope(tape);
    backward(scale(sum(softmax(x)), 0.0));
  }
  for (Real g : x.grad()) EXPECT_EQ(g, 0.0);
}

}  // namespace
}  // namespace advseq
