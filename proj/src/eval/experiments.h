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
#include <span>
#include <string>
#include <vector>

#include "common/config.h"
#include "train/trainer.h"

ADVSEQ_NAMESPACE_BEGIN

// Everything needed to train one model from scratch.
struct ExperimentSetup {
  TransformerConfig mt;
  BiLmConfig lm;
  TrainConfig train;
  LmPretrainConfig lm_pretrain;
  std::uint64_t seed = 1;
};

// One ablation configuration.
struct AblationRow {
  std::string name;
  LossSwitches switches;
  double gamma_src = 0.0;
  double gamma_trg = 0.0;
};

// The six loss-term combinations: clean; clean+lm; clean+x'+lm; clean+z'+lm;
// clean+x'+z'; all.
std::vector<AblationRow> switch_rows(double gamma_src, double gamma_trg);
// Full model over a ratio grid. A side whose ratio is zero is switched off,
// and the LM term is dropped when both are, so the (0, 0) cell is the clean
// baseline.
std::vector<AblationRow> ratio_grid_rows(std::span<const double> src_ratios,
                                         std::span<const double> trg_ratios);

struct AblationResult {
  AblationRow row;
  double bleu = 0.0;
  std::vector<StepReport> trace;
};

using ProgressFn = std::function<void(const std::string&)>;

// Builds a fresh state, pretrains the LMs when the configuration reads them
// and `setup.lm_pretrain.steps` > 0, then trains.
std::unique_ptr<TrainState> train_model(std::span<const SentencePair> corpus,
                                        const ExperimentSetup& setup,
                                        std::vector<StepReport>* trace = nullptr,
                                        const TrainHooks& hooks = {});

// Greedy-decoded corpus BLEU on content tokens.
double validation_bleu(const Transformer& mt, std::span<const SentencePair> valid);

// Trains every row with the same seed and reports validation BLEU.
std::vector<AblationResult> ablation_run(std::span<const SentencePair> train,
                                         std::span<const SentencePair> valid,
                                         const ExperimentSetup& base,
                                         std::span<const AblationRow> rows,
                                         const ProgressFn& progress = {});

std::string ablation_csv(std::span<const AblationResult> results);
std::string ablation_table(std::span<const AblationResult> results);
// Rows are source ratios, columns target ratios; `results` in row-major order.
std::string ratio_grid_table(std::span<const AblationResult> results,
                             std::span<const double> src_ratios, std::span<const double> trg_ratios);

ADVSEQ_NAMESPACE_END
