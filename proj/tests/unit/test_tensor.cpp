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

#include <gtest/gtest.h>

#include <cmath>

#include "common/error.h"
#include "grad/ops.h"
#include "grad/params.h"

namespace advseq {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an advseq::Error";
  return ErrorCode::kContract;
}

TEST(Tensor, NumelMatchesShape) {
  auto t = Tensor::zeros({3, 4, 2});
  EXPECT_EQ(t.numel(), 24);
  EXPECT_EQ(shape_numel(t.shape()), t.numel());
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  auto eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto a = Tensor::from({3, 3}, {1, -2, 3, 4, 5, -6, 7, 8, 9.5});
  auto out = matmul(eye, a);
  for (std::int64_t i = 0; i < 9; ++i) EXPECT_EQ(out.data()[i], a.data()[i]);
}

TEST(Matmul, HandExample) {
  auto out = matmul(Tensor::from({2, 2}, {1, 2, 3, 4}), Tensor::from({2, 1}, {1, 1}));
  ASSERT_EQ(out.shape(), (Shape{2, 1}));
  EXPECT_EQ(out.data()[0], 3);
  EXPECT_EQ(out.data()[1], 7);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimension);
    EXPECT_NE(std::string(e.what()).find("[2,3]"), std::string::npos) << e.what();
  }
}

TEST(Softmax, UniformOnEqualLogits) {
  auto s = softmax(Tensor::from({1, 3}, {0, 0, 0}));
  for (Real v : s.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-7);
}

TEST(Softmax, RowsArePositiveAndSumToOne) {
  Rng rng(1);
  std::vector<Real> v(60);
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-20, 20));
  auto s = softmax(Tensor::from({6, 10}, v));
  for (int r = 0; r < 6; ++r) {
    double total = 0;
    for (int c = 0; c < 10; ++c) {
      EXPECT_GT(s.at(r, c), 0);
      total += s.at(r, c);
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(CrossEntropy, VanishesAsTheCorrectMarginGrows) {
  double previous = 1e9;
  for (Real margin : {1.0f, 5.0f, 10.0f, 30.0f}) {
    auto logits = Tensor::from({1, 3}, {0, margin, 0});
    double loss = cross_entropy(logits, std::vector<TokenId>{1}, kPadId).item();
    EXPECT_LT(loss, previous);
    previous = loss;
  }
  EXPECT_LT(previous, 1e-6);
}

TEST(CrossEntropy, UniformLogitsGiveLogVocab) {
  auto logits = Tensor::zeros({4, 11});
  double loss = cross_entropy(logits, std::vector<TokenId>{4, 5, 6, 7}, kPadId).item();
  EXPECT_NEAR(loss, std::log(11.0), 1e-6);
}

TEST(CrossEntropy, Errors) {
  auto logits = Tensor::zeros({2, 5});
  EXPECT_EQ(code_of([&] { cross_entropy(logits, std::vector<TokenId>{1, 9}, kPadId); }),
            ErrorCode::kVocabulary);
  EXPECT_EQ(code_of([&] { cross_entropy(logits, std::vector<TokenId>{kPadId, kPadId}, kPadId); }),
            ErrorCode::kDegenerateInput);
}

TEST(GatherRows, OutOfRangeIdIsAVocabularyError) {
  auto table = Tensor::zeros({4, 2});
  EXPECT_EQ(code_of([&] { gather_rows(table, std::vector<TokenId>{1, 4}); }), ErrorCode::kVocabulary);
}

TEST(Backward, NonScalarLossIsAContractError) {
  auto x = Tensor::from({2}, {1, 2}, true);
  Tape tape;
  TapeScope scope(tape);
  auto y = scale(x, 2);
  EXPECT_EQ(code_of([&] { backward(y); }), ErrorCode::kContract);
}

TEST(Backward, EveryTrackedLeafGetsAGradientOfItsShape) {
  auto a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  auto b = Tensor::from({3, 2}, {1, 0, 0, 1, 1, 1}, true);
  auto unused = Tensor::from({5}, {1, 1, 1, 1, 1}, true);
  Tape tape;
  {
    TapeScope scope(tape);
    auto u = scale(unused, 3);  // recorded but disconnected from the loss
    (void)u;
    backward(sum(matmul(a, b)));
  }
  EXPECT_EQ(a.grad().size(), 6u);
  EXPECT_EQ(b.grad().size(), 6u);
  EXPECT_EQ(unused.grad().size(), 5u);
  for (Real g : unused.grad()) EXPECT_EQ(g, 0);
  EXPECT_TRUE(tape.empty());
}

TEST(Backward, GradientsAccumulateUntilReset) {
  auto x = Tensor::from({2}, {1, 2}, true);
  for (int pass = 0; pass < 2; ++pass) {
    Tape tape;
    TapeScope scope(tape);
    backward(sum(x));
  }
  for (Real g : x.grad()) EXPECT_EQ(g, 2);
  x.zero_grad();
  for (Real g : x.grad()) EXPECT_EQ(g, 0);
}

TEST(Backward, FrozenParametersReceiveNothing) {
  auto w = Tensor::param({2}, {1, 2});
  auto e = Tensor::from({2}, {3, 4}, true);
  Tape tape;
  {
    TapeScope scope(tape);
    FreezeParams frozen;
    backward(sum(add(w, e)));
  }
  EXPECT_FALSE(w.has_grad());
  for (Real g : e.grad()) EXPECT_EQ(g, 1);
}

TEST(Backward, NoGradScopeRecordsNothing) {
  auto x = Tensor::from({2}, {1, 2}, true);
  Tape tape;
  TapeScope scope(tape);
  {
    NoGradScope off;
    auto y = sum(scale(x, 2));
    (void)y;
  }
  EXPECT_TRUE(tape.empty());
}

TEST(Ops, RepeatedForwardIsBitIdentical) {
  Rng rng(2);
  std::vector<Real> v(24);
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-1, 1));
  auto x = Tensor::from({4, 6}, v);
  auto run = [&] {
    return softmax(layer_norm(matmul(x, reshape(x, {6, 4})), Tensor::full({4}, 1.5), Tensor::full({4}, -0.5)));
  };
  auto a1 = run(), a2 = run();
  for (std::int64_t i = 0; i < a1.numel(); ++i) EXPECT_EQ(a1.data()[i], a2.data()[i]);
}

TEST(Add, BroadcastOnlyOverLeadingRows) {
  auto a = Tensor::zeros({3, 4});
  EXPECT_NO_THROW(add(a, Tensor::zeros({4})));
  EXPECT_EQ(code_of([&] { add(a, Tensor::zeros({3})); }), ErrorCode::kDimension);
}

TEST(Dropout, ZeroRateIsIdentityAndMaskIsSeeded) {
  auto x = Tensor::full({10, 10}, 1);
  Rng r0(1);
  auto same = dropout(x, 0, r0);
  for (Real v : same.data()) EXPECT_EQ(v, 1);
  Rng r1(5), r2(5);
  auto d1 = dropout(x, 0.5, r1), d2 = dropout(x, 0.5, r2);
  for (std::int64_t i = 0; i < d1.numel(); ++i) EXPECT_EQ(d1.data()[i], d2.data()[i]);
}

TEST(Adam, ScheduleWarmsUpThenDecays) {
  AdamConfig c;
  c.learning_rate = 1e-3;
  c.warmup_steps = 10;
  EXPECT_NEAR(inverse_sqrt_schedule(c, 5), 0.5e-3, 1e-12);
  EXPECT_NEAR(inverse_sqrt_schedule(c, 10), 1e-3, 1e-12);
  EXPECT_NEAR(inverse_sqrt_schedule(c, 40), 0.5e-3, 1e-12);
}

TEST(Adam, ParameterWithoutGradientStaysPut) {
  auto used = Tensor::param({2}, {1, 1});
  auto idle = Tensor::param({2}, {3, 3});
  Adam opt(AdamConfig{}, {{"used", used}, {"idle", idle}});
  Tape tape;
  {
    TapeScope scope(tape);
    backward(sum(used));
  }
  opt.step();
  EXPECT_NE(used.data()[0], 1);
  EXPECT_EQ(idle.data()[0], 3);
  EXPECT_EQ(opt.steps_taken(), 1);
}

}  // namespace
}  // namespace advseq
