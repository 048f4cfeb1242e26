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
#include "nmt/transformer.h"

namespace advseq {
namespace {

TransformerConfig small_config() {
  TransformerConfig c;
  c.num_layers = 2;
  c.model_dim = 16;
  c.num_heads = 4;
  c.ff_dim = 32;
  c.src_vocab_size = 20;
  c.trg_vocab_size = 11;
  c.max_len = 12;
  c.dropout = 0.0;
  return c;
}

class TransformerTest : public ::testing::Test {
 protected:
  TransformerTest() : init(7), mt(small_config(), store, init) {}
  ParamStore store;
  Rng init;
  Transformer mt;
};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an advseq::Error";
  return ErrorCode::kContract;
}

TEST_F(TransformerTest, EncodeShapeAndDeterminism) {
  TokenSeq x{4, 5, 6, 7, kEosId};
  Tensor h1 = mt.encode(x), h2 = mt.encode(x);
  EXPECT_EQ(h1.shape(), (Shape{5, 16}));
  for (std::int64_t i = 0; i < h1.numel(); ++i) EXPECT_EQ(h1.data()[i], h2.data()[i]);
}

TEST_F(TransformerTest, OneTokenChangeChangesEncoding) {
  Tensor a = mt.encode(TokenSeq{4, 5, 6, kEosId});
  Tensor b = mt.encode(TokenSeq{4, 9, 6, kEosId});
  double diff = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) diff += std::abs(a.data()[i] - b.data()[i]);
  EXPECT_GT(diff, 1e-3);
}

TEST_F(TransformerTest, OverlengthSourceIsALengthError) {
  TokenSeq x(13, 5);
  EXPECT_EQ(code_of([&] { mt.encode(x); }), ErrorCode::kLength);
}

TEST_F(TransformerTest, DecodeNeedsBos) {
  Tensor h = mt.encode(TokenSeq{4, 5, kEosId});
  EXPECT_EQ(code_of([&] { mt.decode(TokenSeq{5, 6}, h); }), ErrorCode::kContract);
}

TEST_F(TransformerTest, LogitShapeAndAttentionColumns) {
  Tensor h = mt.encode(TokenSeq{4, 5, 6, kEosId});
  auto out = mt.decode(TokenSeq{kBosId, 5, 6, 7}, h);
  EXPECT_EQ(out.logits.shape(), (Shape{4, 11}));
  ASSERT_EQ(out.attention.size(), 1u);
  const auto& a = out.attention[0];
  ASSERT_EQ(a.src_len, 4);
  ASSERT_EQ(a.trg_len, 4);
  for (std::int64_t j = 0; j < a.trg_len; ++j) {
    double col = 0;
    for (std::int64_t i = 0; i < a.src_len; ++i) {
      EXPECT_GE(a(i, j), 0);
      col += a(i, j);
    }
    EXPECT_NEAR(col, 1.0, 1e-5);
  }
}

TEST_F(TransformerTest, CausalMaskKeepsEarlierLogitsBitIdentical) {
  Tensor h = mt.encode(TokenSeq{4, 5, 6, kEosId});
  TokenSeq z{kBosId, 5, 6, 7, 8};
  auto base = mt.decode(z, h).logits;
  for (std::size_t j = 1; j < z.size(); ++j) {
    TokenSeq changed = z;
    changed[j] = changed[j] == 9 ? 10 : 9;
    auto out = mt.decode(changed, h).logits;
    for (std::int64_t r = 0; r < static_cast<std::int64_t>(j); ++r) {
      for (std::int64_t c = 0; c < 11; ++c) EXPECT_EQ(out.at(r, c), base.at(r, c)) << "j=" << j;
    }
  }
}

TEST_F(TransformerTest, UniformLogitsGiveLogVocab) {
  for (const auto& [name, t] : store.entries()) {
    if (name.rfind("mt.output.", 0) == 0) {
      Tensor p = t;
      for (auto& v : p.data()) v = 0;
    }
  }
  auto p = SentencePair::from_content(TokenSeq{4, 5}, TokenSeq{6, 7, 8});
  EXPECT_NEAR(mt.translation_loss(p.x, p.z, p.y).item(), std::log(11.0), 1e-5);
}

TEST_F(TransformerTest, LossEqualsManualLogSoftmaxMean) {
  auto p = SentencePair::from_content(TokenSeq{4, 5, 9}, TokenSeq{6, 7, 8, 5});
  double loss = mt.translation_loss(p.x, p.z, p.y).item();
  auto logits = mt.decode(p.z, mt.encode(p.x)).logits;
  double manual = 0;
  for (std::size_t j = 0; j < p.y.size(); ++j) {
    double mx = -1e30;
    for (int c = 0; c < 11; ++c) mx = std::max(mx, double(logits.at(j, c)));
    double z = 0;
    for (int c = 0; c < 11; ++c) z += std::exp(logits.at(j, c) - mx);
    manual -= logits.at(j, p.y[j]) - mx - std::log(z);
  }
  manual /= static_cast<double>(p.y.size());
  EXPECT_NEAR(loss, manual, 1e-5);
}

TEST_F(TransformerTest, BatchLossIsMeanOfPairLosses) {
  auto a = SentencePair::from_content(TokenSeq{4, 5, 9}, TokenSeq{6, 7});
  auto b = SentencePair::from_content(TokenSeq{10, 11}, TokenSeq{8, 5, 9, 4});
  double la = mt.translation_loss(a.x, a.z, a.y).item();
  double lb = mt.translation_loss(b.x, b.z, b.y).item();
  double ab = mt.batch_loss(std::vector<SentencePair>{a, b}, ForwardMode::eval()).item();
  double ba = mt.batch_loss(std::vector<SentencePair>{b, a}, ForwardMode::eval()).item();
  EXPECT_NEAR(ab, (la + lb) / 2, 1e-6);
  EXPECT_NEAR(ba, ab, 1e-6);
}

TEST_F(TransformerTest, InputGradientShapes) {
  auto p = SentencePair::from_content(TokenSeq{4, 5, 9}, TokenSeq{6, 7});
  auto g = mt.input_embedding_grads(p);
  EXPECT_EQ(g.dim, 16);
  EXPECT_EQ(g.source.size(), p.x.size() * 16);
  EXPECT_EQ(g.target.size(), p.z.size() * 16);
  // Parameters are untouched by the gradient query.
  for (const auto& [name, t] : store.entries()) EXPECT_FALSE(t.has_grad()) << name;
}

TEST_F(TransformerTest, GreedyDecodeRespectsMaxStepsAndIsDeterministic) {
  TokenSeq x{4, 5, 6, kEosId};
  EXPECT_LE(mt.greedy_decode(x, 1).size(), 1u);
  EXPECT_EQ(mt.greedy_decode(x, 8), mt.greedy_decode(x, 8));
}

TEST(TransformerOverfit, MemorizesASinglePair) {
  ParamStore store;
  Rng init(3);
  Transformer mt(small_config(), store, init);
  AdamConfig ac;
  ac.learning_rate = 0.01;
  ac.warmup_steps = 1;
  Adam opt(ac, store.entries());
  auto p = SentencePair::from_content(TokenSeq{4, 9, 12, 5}, TokenSeq{7, 5, 10});
  double loss = 0;
  for (int step = 0; step < 150; ++step) {
    Tape tape;
    TapeScope scope(tape);
    Tensor l = mt.batch_loss(std::vector<SentencePair>{p}, ForwardMode::eval());
    loss = l.item();
    backward(l);
    opt.step();
  }
  EXPECT_LT(loss, 0.05);
  EXPECT_EQ(mt.greedy_decode(p.x, 10), (TokenSeq{7, 5, 10}));
}

}  // namespace
}  // namespace advseq
