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

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adv/advgen.h"
#include "common/config.h"
#include "data/corpus.h"
#include "grad/params.h"
#include "lm/bilm.h"
#include "nmt/transformer.h"

ADVSEQ_NAMESPACE_BEGIN

// Which objective terms are active. The robustness term is on whenever
// either side is perturbed.
struct LossSwitches {
  bool clean = true;
  bool lm = true;
  bool adv_source = true;
  bool adv_target = true;

  bool robust() const { return adv_source || adv_target; }
  bool needs_lm() const { return lm || robust(); }
  bool any() const { return clean || lm || robust(); }
};

struct TrainConfig {
  LossSwitches switches;
  AdvConfig adv;
  AdamConfig adam;
  std::int64_t steps = 1000;
  std::int64_t batch_tokens = 1024;
  std::int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints

  void validate() const;
};

// Everything that training mutates: the parameter store with the MT model and
// one LM per language (each LM aliases the MT embedding table of its
// language), the optimizer over the whole store, step counter and the
// dropout stream.
class TrainState {
 public:
  TrainState(TransformerConfig mt_cfg, BiLmConfig lm_cfg, AdamConfig adam, std::uint64_t seed);
  TrainState(const TrainState&) = delete;
  TrainState& operator=(const TrainState&) = delete;

  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }
  Transformer& mt() { return *mt_; }
  const Transformer& mt() const { return *mt_; }
  BiLm& lm_x() { return *lm_x_; }
  const BiLm& lm_x() const { return *lm_x_; }
  BiLm& lm_y() { return *lm_y_; }
  const BiLm& lm_y() const { return *lm_y_; }
  Adam& optimizer() { return *adam_; }
  const Adam& optimizer() const { return *adam_; }
  Rng& dropout_rng() { return dropout_rng_; }
  const Rng& dropout_rng() const { return dropout_rng_; }

  std::uint64_t seed() const { return seed_; }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }
  bool lms_pretrained() const { return lms_pretrained_; }
  void set_lms_pretrained(bool v) { lms_pretrained_ = v; }

 private:
  std::uint64_t seed_;
  ParamStore store_;
  std::unique_ptr<Transformer> mt_;
  std::unique_ptr<BiLm> lm_x_;
  std::unique_ptr<BiLm> lm_y_;
  std::unique_ptr<Adam> adam_;
  Rng dropout_rng_;
  std::int64_t step_ = 0;
  bool lms_pretrained_ = false;
};

// Pretrains both LMs on the content side of the corpus (source LM on x,
// target LM on y). Returns the two loss traces.
std::pair<std::vector<double>, std::vector<double>> pretrain_language_models(
    TrainState& state, std::span<const SentencePair> corpus, const LmPretrainConfig& cfg);

// Perturbed inputs for a group of pairs.
struct RobustInputs {
  std::vector<SentencePair> pairs;  // (x', z', y)
  std::int64_t src_positions = 0;   // positions sampled on the source side
  std::int64_t src_replaced = 0;
  std::int64_t trg_positions = 0;
  std::int64_t trg_replaced = 0;
  std::int64_t trg_fallbacks = 0;   // pairs whose target positions were uniform
  std::int64_t warnings = 0;        // adv_gen calls with nothing to perturb
  double advgen_ms = 0.0;
};

// Builds x' from x (source LM likelihood, uniform positions) and then z' from
// z (LM/MT mixture, attention-weighted positions) under the current
// parameters. `sentence_ids` seed one random stream per pair, derived from
// `seed`, so a pair's perturbation does not depend on its batch neighbours.
RobustInputs make_robust_inputs(std::span<const SentencePair> pairs,
                                std::span<const std::size_t> sentence_ids, const TrainState& state,
                                const AdvConfig& adv, bool adv_source, bool adv_target,
                                std::uint64_t seed);

struct RobustLoss {
  Tensor loss;
  RobustInputs inputs;
};

// -log P(y | x', z'). The perturbation is data: no gradient flows through it.
RobustLoss robustness_loss(std::span<const SentencePair> pairs,
                           std::span<const std::size_t> sentence_ids, const TrainState& state,
                           const AdvConfig& adv, bool adv_source, bool adv_target,
                           std::uint64_t seed, const ForwardMode& mode);
RobustLoss robustness_loss(const SentencePair& pair, const TrainState& state, const AdvConfig& adv,
                           std::uint64_t seed, const ForwardMode& mode = ForwardMode::eval());

struct LossTerms {
  Tensor total;
  std::optional<double> clean, robust, lm_x, lm_y;
  RobustInputs robust_inputs;
};

// Unweighted sum of the enabled terms, evaluated in order clean, robust,
// source LM, target LM. A null `dropout_rng` evaluates without dropout.
LossTerms total_loss(const Batch& batch, const TrainState& state, const TrainConfig& cfg,
                     std::uint64_t adv_seed, Rng* dropout_rng);

struct StepReport {
  std::int64_t step = 0;
  double total = 0.0;
  std::optional<double> clean, robust, lm_x, lm_y;
  std::int64_t batch_pairs = 0;
  std::int64_t src_positions = 0, src_replaced = 0;
  std::int64_t trg_positions = 0, trg_replaced = 0, trg_fallbacks = 0;
  double lr = 0.0;
  double wall_ms = 0.0;
  double advgen_ms = 0.0;
  bool robust_enabled = false;

  // One JSON object on a single line. Disabled terms are omitted.
  std::string to_json() const;
};

struct TrainHooks {
  std::function<void(const StepReport&)> on_step;
  std::function<void(const TrainState&)> on_checkpoint;
};

// Runs steps state.step()+1 .. cfg.steps. Aborts with a divergence error on a
// non-finite loss. Resuming from a checkpointed state replays the batch
// stream to the saved position.
std::vector<StepReport> train(std::span<const SentencePair> corpus, const TrainConfig& cfg,
                              TrainState& state, const TrainHooks& hooks = {});

ADVSEQ_NAMESPACE_END
