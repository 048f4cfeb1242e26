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

#include "train/trainer.h"

#include <chrono>
#include <cmath>
#include "json.hpp"

#include "common/error.h"
#include "grad/ops.h"

ADVSEQ_NAMESPACE_BEGIN

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::vector<TokenSeq> contents(std::span<const SentencePair> pairs, bool source) {
  std::vector<TokenSeq> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(content_of(source ? p.x : p.y));
  return out;
}

Tensor accumulate(const Tensor& total, const Tensor& term) {
  return total.defined() ? add(total, term) : term;
}

}  // namespace

void TrainConfig::validate() const {
  if (!switches.any()) {
    fail(ErrorCode::kConfig, "all loss terms are disabled; enable at least one of "
                             "clean, lm, adv_source, adv_target");
  }
  adv.validate();
  if (steps < 0) fail(ErrorCode::kConfig, "train.steps must be non-negative");
  if (batch_tokens < 1) fail(ErrorCode::kConfig, "train.batch_tokens must be positive");
  if (checkpoint_every < 0) fail(ErrorCode::kConfig, "train.checkpoint_every must be non-negative");
  if (adam.learning_rate <= 0.0) fail(ErrorCode::kConfig, "learning rate must be positive");
}

TrainState::TrainState(TransformerConfig mt_cfg, BiLmConfig lm_cfg, AdamConfig adam,
                       std::uint64_t seed)
    : seed_(seed), dropout_rng_(derive_seed(seed, "train.dropout")) {
  mt_cfg.validate();
  if (lm_cfg.model_dim != mt_cfg.model_dim) {
    fail(ErrorCode::kConfig, "LM width " + std::to_string(lm_cfg.model_dim) +
                                 " must equal the translation model width " +
                                 std::to_string(mt_cfg.model_dim) + " to share embeddings");
  }
  Rng mt_rng(derive_seed(seed, "init.mt"));
  mt_ = std::make_unique<Transformer>(mt_cfg, store_, mt_rng, "mt");

  BiLmConfig cx = lm_cfg;
  cx.vocab_size = mt_cfg.src_vocab_size;
  Rng x_rng(derive_seed(seed, "init.lm_x"));
  lm_x_ = std::make_unique<BiLm>(cx, store_, x_rng, "lm_x", mt_->source_embedding());

  BiLmConfig cy = lm_cfg;
  cy.vocab_size = mt_cfg.trg_vocab_size;
  Rng y_rng(derive_seed(seed, "init.lm_y"));
  lm_y_ = std::make_unique<BiLm>(cy, store_, y_rng, "lm_y", mt_->target_embedding());

  adam_ = std::make_unique<Adam>(adam, store_.entries());
}

std::pair<std::vector<double>, std::vector<double>> pretrain_language_models(
    TrainState& state, std::span<const SentencePair> corpus, const LmPretrainConfig& cfg) {
  LmPretrainConfig cx = cfg, cy = cfg;
  cx.seed = derive_seed(cfg.seed, "x");
  cy.seed = derive_seed(cfg.seed, "y");
  auto tx = pretrain(state.lm_x(), contents(corpus, true), cx);
  auto ty = pretrain(state.lm_y(), contents(corpus, false), cy);
  state.set_lms_pretrained(true);
  return {std::move(tx), std::move(ty)};
}

RobustInputs make_robust_inputs(std::span<const SentencePair> pairs,
                                std::span<const std::size_t> sentence_ids, const TrainState& state,
                                const AdvConfig& adv, bool adv_source, bool adv_target,
                                std::uint64_t seed) {
  const auto start = Clock::now();
  if (sentence_ids.size() != pairs.size()) {
    fail(ErrorCode::kContract, "one sentence id per pair required");
  }
  RobustInputs out;
  out.pairs.assign(pairs.begin(), pairs.end());
  const bool do_src = adv_source && adv.gamma_src > 0.0;
  const bool do_trg = adv_target && adv.gamma_trg > 0.0;
  if (pairs.empty() || (!do_src && !do_trg)) {
    out.advgen_ms = elapsed_ms(start);
    return out;
  }

  const Transformer& mt = state.mt();
  const std::int64_t dim = mt.config().model_dim;
  std::vector<Rng> rngs;
  rngs.reserve(pairs.size());
  for (auto id : sentence_ids) rngs.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(id)));

  auto tally = [&out](const AdvResult& r, std::int64_t& positions, std::int64_t& replaced) {
    positions += static_cast<std::int64_t>(r.sampled.size());
    replaced += static_cast<std::int64_t>(r.changed.size());
    if (r.status != AdvStatus::kOk) ++out.warnings;
  };

  // Source side: gradients and attention from the clean pair.
  std::vector<InputGradients> clean_grads;
  if (do_src) {
    clean_grads = mt.input_embedding_grads(pairs);
    std::vector<TokenSeq> xs;
    for (const auto& p : pairs) xs.push_back(p.x);
    const auto q = q_src(xs, state.lm_x());
    for (std::size_t b = 0; b < pairs.size(); ++b) {
      const auto d_pos = uniform_positions(pairs[b].x, adv.excluded);
      const auto r = adv_gen(
          pairs[b].x, [&](std::int64_t i) { return q[b][static_cast<std::size_t>(i)]; }, d_pos,
          clean_grads[b].source, dim, adv.gamma_src, rngs[b], mt.source_embedding(), adv.n,
          adv.excluded);
      out.pairs[b].x = r.sentence;
      tally(r, out.src_positions, out.src_replaced);
    }
  }

  // Target side: gradients and next-word distributions given x'.
  if (do_trg) {
    const auto grads = mt.input_embedding_grads(out.pairs, /*want_probs=*/true);
    std::vector<TokenSeq> zs;
    for (const auto& p : pairs) zs.push_back(p.z);
    const auto lm_rows = q_src(zs, state.lm_y());
    for (std::size_t b = 0; b < pairs.size(); ++b) {
      const auto& z = pairs[b].z;
      const auto q = mix_target_likelihood(z, lm_rows[b], grads[b].next_token_probs, adv.lambda);
      bool fallback = true;
      const PositionDistribution d_pos =
          do_src ? target_position_distribution(clean_grads[b].attention, pairs[b].x,
                                                out.pairs[b].x, z, adv.excluded, &fallback)
                 : uniform_positions(z, adv.excluded);
      if (fallback) ++out.trg_fallbacks;
      const auto r = adv_gen(
          z, [&](std::int64_t i) { return q[static_cast<std::size_t>(i)]; }, d_pos, grads[b].target,
          dim, adv.gamma_trg, rngs[b], mt.target_embedding(), adv.n, adv.excluded);
      out.pairs[b].z = r.sentence;
      tally(r, out.trg_positions, out.trg_replaced);
    }
  }
  out.advgen_ms = elapsed_ms(start);
  return out;
}

RobustLoss robustness_loss(std::span<const SentencePair> pairs,
                           std::span<const std::size_t> sentence_ids, const TrainState& state,
                           const AdvConfig& adv, bool adv_source, bool adv_target,
                           std::uint64_t seed, const ForwardMode& mode) {
  RobustLoss out;
  {
    // Perturbation search runs on its own tapes; nothing leaks into the
    // caller's graph.
    NoGradScope no_grad;
    out.inputs = make_robust_inputs(pairs, sentence_ids, state, adv, adv_source, adv_target, seed);
  }
  out.loss = state.mt().batch_loss(out.inputs.pairs, mode);
  return out;
}

RobustLoss robustness_loss(const SentencePair& pair, const TrainState& state, const AdvConfig& adv,
                           std::uint64_t seed, const ForwardMode& mode) {
  const std::size_t id = 0;
  return robustness_loss(std::span<const SentencePair>(&pair, 1), std::span<const std::size_t>(&id, 1),
                         state, adv, true, true, seed, mode);
}

LossTerms total_loss(const Batch& batch, const TrainState& state, const TrainConfig& cfg,
                     std::uint64_t adv_seed, Rng* dropout_rng) {
  const auto& sw = cfg.switches;
  if (!sw.any()) fail(ErrorCode::kConfig, "all loss terms are disabled");
  const auto pairs = batch.pairs();
  const ForwardMode mt_mode =
      dropout_rng ? ForwardMode::training(static_cast<Real>(state.mt().config().dropout), *dropout_rng)
                  : ForwardMode::eval();
  const ForwardMode lm_mode =
      dropout_rng
          ? ForwardMode::training(static_cast<Real>(state.lm_x().config().dropout), *dropout_rng)
          : ForwardMode::eval();

  LossTerms out;
  if (sw.clean) {
    Tensor l = state.mt().batch_loss(pairs, mt_mode);
    out.clean = l.item();
    out.total = accumulate(out.total, l);
  }
  if (sw.robust()) {
    RobustLoss r = robustness_loss(pairs, batch.indices, state, cfg.adv, sw.adv_source, sw.adv_target,
                                   adv_seed, mt_mode);
    out.robust = r.loss.item();
    out.total = accumulate(out.total, r.loss);
    out.robust_inputs = std::move(r.inputs);
  }
  if (sw.lm) {
    Tensor lx = state.lm_x().lm_loss(contents(pairs, true), lm_mode);
    Tensor ly = state.lm_y().lm_loss(contents(pairs, false), lm_mode);
    out.lm_x = lx.item();
    out.lm_y = ly.item();
    out.total = accumulate(accumulate(out.total, lx), ly);
  }
  return out;
}

std::string StepReport::to_json() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["total"] = total;
  if (clean) j["l_clean"] = *clean;
  if (robust) j["l_robust"] = *robust;
  if (lm_x) j["l_lm_x"] = *lm_x;
  if (lm_y) j["l_lm_y"] = *lm_y;
  j["pairs"] = batch_pairs;
  if (robust_enabled) {
    j["src_positions"] = src_positions;
    j["src_replaced"] = src_replaced;
    j["trg_positions"] = trg_positions;
    j["trg_replaced"] = trg_replaced;
    j["trg_fallbacks"] = trg_fallbacks;
  }
  j["lr"] = lr;
  j["wall_ms"] = wall_ms;
  if (robust_enabled) j["advgen_ms"] = advgen_ms;
  return j.dump();
}

std::vector<StepReport> train(std::span<const SentencePair> corpus, const TrainConfig& cfg,
                              TrainState& state, const TrainHooks& hooks) {
  cfg.validate();
  if (corpus.empty()) fail(ErrorCode::kData, "training corpus is empty");
  BatchStream stream(corpus, cfg.batch_tokens, derive_seed(state.seed(), "data.order"));
  for (std::int64_t i = 0; i < state.step(); ++i) stream.next();
  const std::uint64_t adv_root = derive_seed(derive_seed(state.seed(), "advgen"), cfg.adv.rng_seed);

  std::vector<StepReport> reports;
  while (state.step() < cfg.steps) {
    const std::int64_t step = state.step() + 1;
    const Batch& batch = stream.next();
    const auto start = Clock::now();

    StepReport rep;
    rep.step = step;
    rep.batch_pairs = batch.size;
    rep.robust_enabled = cfg.switches.robust();
    rep.lr = state.optimizer().current_lr();
    {
      Tape tape;
      TapeScope scope(tape);
      LossTerms terms =
          total_loss(batch, state, cfg, derive_seed(adv_root, static_cast<std::uint64_t>(step)),
                     &state.dropout_rng());
      rep.total = terms.total.item();
      if (!std::isfinite(rep.total)) {
        std::string which;
        auto note = [&which](const char* name, const std::optional<double>& v) {
          if (v && !std::isfinite(*v)) which += (which.empty() ? "" : ",") + std::string(name);
        };
        note("l_clean", terms.clean);
        note("l_robust", terms.robust);
        note("l_lm_x", terms.lm_x);
        note("l_lm_y", terms.lm_y);
        fail(ErrorCode::kDiverged,
             "non-finite loss at step " + std::to_string(step) + " (terms: " + which + ")");
      }
      rep.clean = terms.clean;
      rep.robust = terms.robust;
      rep.lm_x = terms.lm_x;
      rep.lm_y = terms.lm_y;
      const auto& ri = terms.robust_inputs;
      rep.src_positions = ri.src_positions;
      rep.src_replaced = ri.src_replaced;
      rep.trg_positions = ri.trg_positions;
      rep.trg_replaced = ri.trg_replaced;
      rep.trg_fallbacks = ri.trg_fallbacks;
      rep.advgen_ms = ri.advgen_ms;
      backward(terms.total);
    }
    state.optimizer().step();
    state.set_step(step);
    rep.wall_ms = elapsed_ms(start);
    if (hooks.on_step) hooks.on_step(rep);
    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 && hooks.on_checkpoint) {
      hooks.on_checkpoint(state);
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

ADVSEQ_NAMESPACE_END
