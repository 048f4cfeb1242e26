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
#include <numeric>

#include "common/error.h"
#include "data/toy_task.h"
#include "lm/bilm.h"

namespace advseq {
namespace {

BiLmConfig small_lm(int vocab) {
  BiLmConfig c;
  c.num_layers = 1;
  c.model_dim = 16;
  c.num_heads = 2;
  c.ff_dim = 32;
  c.vocab_size = vocab;
  c.max_len = 16;
  c.dropout = 0.0;
  return c;
}

class BiLmTest : public ::testing::Test {
 protected:
  BiLmTest() : init(5), lm(small_lm(15), store, init, "lm") {}
  ParamStore store;
  Rng init;
  BiLm lm;
};

TEST_F(BiLmTest, DistributionsAreNormalized) {
  TokenSeq s{4, 8, 9, 13, 5};
  for (const auto& row : lm.position_distributions(s)) {
    ASSERT_EQ(row.size(), 15u);
    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-6);
  }
}

TEST_F(BiLmTest, SingleTokenSentenceStillNormalized) {
  auto row = lm.position_distribution(TokenSeq{7}, 0);
  EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-6);
}

TEST_F(BiLmTest, PositionOutOfRangeIsAContractError) {
  try {
    lm.position_distribution(TokenSeq{4, 5}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kContract);
  }
}

TEST_F(BiLmTest, PositionNeverSeesItsOwnToken) {
  TokenSeq s{4, 8, 9, 13, 5, 6};
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto base = lm.position_distribution(s, static_cast<std::int64_t>(i));
    for (TokenId sub = 0; sub < 15; ++sub) {
      TokenSeq t = s;
      t[i] = sub;
      EXPECT_EQ(lm.position_distribution(t, static_cast<std::int64_t>(i)), base) << "i=" << i << " sub=" << sub;
    }
  }
}

TEST_F(BiLmTest, ZeroOutputLayerGivesLogVocab) {
  for (const auto& [name, t] : store.entries()) {
    if (name.rfind("lm.output.", 0) == 0) {
      Tensor p = t;
      for (auto& v : p.data()) v = 0;
    }
  }
  std::vector<TokenSeq> batch{{4, 5, 6}, {7, 8}};
  EXPECT_NEAR(lm.lm_loss(batch, ForwardMode::eval()).item(), std::log(15.0), 1e-5);
}

TEST(BiLmSingleWord, VocabularyOfOneGivesZeroLoss) {
  ParamStore store;
  Rng init(1);
  BiLm lm(small_lm(1), store, init, "lm");
  std::vector<TokenSeq> batch{{0, 0, 0}};
  EXPECT_NEAR(lm.lm_loss(batch, ForwardMode::eval()).item(), 0.0, 1e-7);
}

TEST_F(BiLmTest, ScoreIsIndependentOfBatchContext) {
  TokenSeq a{4, 5, 6, 7}, b{9, 10};
  double alone = lm.sentence_score(a);
  auto batched = lm.sentence_scores(std::vector<TokenSeq>{b, a, b});
  EXPECT_NEAR(batched[1], alone, 1e-6);
}

TEST_F(BiLmTest, SingleTokenScoreIsThatPositionsLogProb) {
  auto row = lm.position_distribution(TokenSeq{9}, 0);
  EXPECT_NEAR(lm.sentence_score(TokenSeq{9}), std::log(row[9]), 1e-5);
}

TEST_F(BiLmTest, SharedEmbeddingIsAliased) {
  ParamStore s2;
  Rng r(3);
  Tensor table = s2.add("mt.src_embed", Tensor::param({15, 16}, std::vector<Real>(15 * 16, 0.5)));
  BiLm shared(small_lm(15), s2, r, "lm_x", table);
  EXPECT_EQ(shared.embedding().impl(), table.impl());
  EXPECT_FALSE(s2.contains("lm_x.embed"));
}

TEST_F(BiLmTest, ZeroPretrainStepsLeavesInitialization) {
  std::vector<std::vector<Real>> before;
  for (const auto& [n, t] : lm.parameters()) before.emplace_back(t.data().begin(), t.data().end());
  LmPretrainConfig cfg;
  cfg.steps = 0;
  auto trace = pretrain(lm, std::vector<TokenSeq>{{4, 5}}, cfg);
  EXPECT_TRUE(trace.empty());
  std::size_t k = 0;
  for (const auto& [n, t] : lm.parameters()) {
    EXPECT_EQ(std::vector<Real>(t.data().begin(), t.data().end()), before[k++]) << n;
  }
}

TEST_F(BiLmTest, EmptyCorpusIsADataError) {
  LmPretrainConfig cfg;
  cfg.steps = 3;
  try {
    pretrain(lm, std::vector<TokenSeq>{}, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kData);
  }
}

// Toy-corpus content sentences over a 20-word vocabulary.
std::vector<TokenSeq> toy_sentences(int n) {
  ToyTaskSpec spec;
  spec.kind = ToyKind::kCipher;
  spec.vocab_size = 20;
  spec.corpus_size = n;
  spec.min_len = 5;
  spec.max_len = 9;
  auto text = make_toy_task(spec);
  Vocab v = Vocab::build(text.src);
  std::vector<TokenSeq> out;
  for (const auto& s : text.src) out.push_back(v.encode(s));
  return out;
}

class BiLmPretrain : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    corpus = toy_sentences(50);
    store = std::make_unique<ParamStore>();
    Rng init(9);
    lm = std::make_unique<BiLm>(small_lm(24), *store, init, "lm");
    LmPretrainConfig cfg;
    cfg.steps = 200;
    cfg.batch_sentences = 10;
    cfg.adam.learning_rate = 3e-3;
    cfg.adam.warmup_steps = 20;
    cfg.seed = 4;
    trace = pretrain(*lm, corpus, cfg);
  }
  static void TearDownTestSuite() {
    lm.reset();
    store.reset();
  }
  static std::vector<TokenSeq> corpus;
  static std::unique_ptr<ParamStore> store;
  static std::unique_ptr<BiLm> lm;
  static std::vector<double> trace;
};
std::vector<TokenSeq> BiLmPretrain::corpus;
std::unique_ptr<ParamStore> BiLmPretrain::store;
std::unique_ptr<BiLm> BiLmPretrain::lm;
std::vector<double> BiLmPretrain::trace;

TEST_F(BiLmPretrain, LossTrendsDown) {
  ASSERT_EQ(trace.size(), 200u);
  auto window = [&](std::size_t lo) { return std::accumulate(trace.begin() + lo, trace.begin() + lo + 20, 0.0) / 20; };
  EXPECT_LT(window(180), window(0) - 0.5);
  EXPECT_LT(window(100), window(0));
  EXPECT_LT(window(180), window(100));
}

TEST_F(BiLmPretrain, CorpusSentencesOutscoreShuffledOnes) {
  Rng rng(2);
  int wins = 0;
  for (const auto& s : corpus) {
    TokenSeq shuffled = s;
    shuffle_range(shuffled.begin(), shuffled.end(), rng);
    if (shuffled == s) continue;
    wins += lm->sentence_score(s) > lm->sentence_score(shuffled);
  }
  EXPECT_GE(wins, 45);
}

TEST(BiLmDeterminism, SameSeedSameTrace) {
  auto corpus = toy_sentences(20);
  auto run = [&] {
    ParamStore store;
    Rng init(1);
    BiLmConfig c = small_lm(24);
    c.dropout = 0.1;
    BiLm lm(c, store, init, "lm");
    LmPretrainConfig cfg;
    cfg.steps = 5;
    cfg.seed = 8;
    return pretrain(lm, corpus, cfg);
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace advseq
