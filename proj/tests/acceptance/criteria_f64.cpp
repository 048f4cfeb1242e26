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

// Criteria that need 64-bit reals: finite differences and exact loss
// recomposition.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "acceptance/criteria.h"
#include "support/embedding_fd.h"
#include "train/trainer.h"

namespace advseq::acceptance {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kFdTolerance = 1e-4;
constexpr double kFdBudgetSeconds = 120.0;
constexpr int kFdPairs = 20;
constexpr double kRecomposeTolerance = 1e-6;

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

TokenSeq random_content(Rng& rng, int vocab, std::int64_t len) {
  TokenSeq s;
  for (std::int64_t i = 0; i < len; ++i) {
    s.push_back(kNumReserved + static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(vocab - kNumReserved))));
  }
  return s;
}

SentencePair random_pair(Rng& rng, int src_vocab, int trg_vocab) {
  const auto lx = 2 + static_cast<std::int64_t>(rng.below(7));
  const auto ly = 2 + static_cast<std::int64_t>(rng.below(7));
  return SentencePair::from_content(random_content(rng, src_vocab, lx), random_content(rng, trg_vocab, ly));
}

TransformerConfig mt_config() {
  TransformerConfig c;
  c.num_layers = 2;
  c.model_dim = 32;
  c.num_heads = 4;
  c.ff_dim = 64;
  c.src_vocab_size = 40;
  c.trg_vocab_size = 36;
  c.max_len = 16;
  c.dropout = 0.0;
  return c;
}

}  // namespace

Verdict gradient_fidelity() {
  const auto start = std::chrono::steady_clock::now();
  ParamStore store;
  Rng init(derive_seed(1, "init.mt"));
  Transformer mt(mt_config(), store, init);
  Rng rng(101);
  double worst = 0;
  std::size_t coords = 0;
  for (int k = 0; k < kFdPairs; ++k) {
    const auto r = testing::check_input_gradients(mt, random_pair(rng, 40, 36), kFdStep, true);
    worst = std::max(worst, r.max_rel_error);
    coords += r.checked;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Verdict v{1, worst <= kFdTolerance && secs <= kFdBudgetSeconds, ""};
  v.detail = fmt("max rel err %.2e (tol %.0e) over %.0f source+decoder input coords; %.1fs (budget ",
                 worst, kFdTolerance, static_cast<double>(coords), secs) +
             fmt("%.0fs)", kFdBudgetSeconds);
  return v;
}

Verdict degeneracy() {
  BiLmConfig lm;
  lm.num_layers = 1;
  lm.model_dim = 32;
  lm.num_heads = 4;
  lm.ff_dim = 64;
  lm.max_len = 16;
  lm.dropout = 0.0;
  TrainState state(mt_config(), lm, AdamConfig{}, 5);

  Rng rng(55);
  std::vector<SentencePair> pairs;
  for (int k = 0; k < 24; ++k) pairs.push_back(random_pair(rng, 40, 36));

  AdvConfig adv;
  adv.gamma_src = 0.0;
  adv.gamma_trg = 0.0;
  int exact = 0;
  NoGradScope no_grad;
  for (const auto& p : pairs) {
    const double robust = robustness_loss(p, state, adv, 9).loss.item();
    const std::vector<SentencePair> one{p};
    exact += robust == state.mt().batch_loss(one, ForwardMode::eval()).item() ? 1 : 0;
  }

  // Full objective on one batch against independently computed terms.
  TrainConfig cfg;
  cfg.adv = adv;
  cfg.switches = LossSwitches{};
  std::vector<std::size_t> idx(8);
  std::iota(idx.begin(), idx.end(), 0);
  const Batch batch = make_batch(pairs, idx);
  const auto bp = batch.pairs();
  const double total = total_loss(batch, state, cfg, 3, nullptr).total.item();
  std::vector<TokenSeq> xs, ys;
  for (const auto& p : bp) {
    xs.push_back(content_of(p.x));
    ys.push_back(content_of(p.y));
  }
  const double clean = state.mt().batch_loss(bp, ForwardMode::eval()).item();
  const double recomposed = 2 * clean + state.lm_x().lm_loss(xs, ForwardMode::eval()).item() +
                            state.lm_y().lm_loss(ys, ForwardMode::eval()).item();
  const double gap = std::abs(total - recomposed);

  Verdict v{5, exact == static_cast<int>(pairs.size()) && gap <= kRecomposeTolerance, ""};
  v.detail = fmt("robust==translation bit-exact on %.0f/%.0f pairs; |total - (2 clean + lm_x + lm_y)| = %.1e (<= %.0e)",
                 exact, static_cast<double>(pairs.size()), gap, kRecomposeTolerance);
  return v;
}

}  // namespace advseq::acceptance
