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

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "app/run_config.h"
#include "data/corpus.h"
#include "data/vocab.h"
#include "train/trainer.h"

ADVSEQ_NAMESPACE_BEGIN

// Receives the human-readable report lines a command produces.
using Printer = std::function<void(const std::string&)>;

struct Corpora {
  Vocab src_vocab, trg_vocab;
  ParallelText train_text, valid_text, test_text;
  std::vector<SentencePair> train, valid, test;
};

// Generates the toy task or reads the configured files. Vocabularies are
// taken from the arguments when given, else loaded from data.*_vocab when
// set, else built from the training side.
Corpora prepare_data(const RunConfig& cfg, const Vocab* src_vocab = nullptr,
                     const Vocab* trg_vocab = nullptr);

// A trained model together with the vocabularies it was trained with.
struct LoadedModel {
  Vocab src_vocab, trg_vocab;
  std::unique_ptr<TrainState> state;
};

// Restores `checkpoint` into a state built from cfg's architecture. The
// vocabularies come from data.*_vocab when set, else from src.vocab and
// trg.vocab beside the checkpoint.
LoadedModel load_model(const RunConfig& cfg, const std::string& checkpoint);

// The seven subcommands. All artifacts go under cfg.out, which is created
// on demand; each command also writes the resolved config there.
void cmd_gen_toy(const RunConfig& cfg, const Printer& print);
void cmd_pretrain_lm(const RunConfig& cfg, const Printer& print);
// `init` optionally names a checkpoint to start from (pretrained LMs or a
// run to resume).
void cmd_train(const RunConfig& cfg, const std::string& init, const Printer& print);
// Attacks each sentence with the source-side generator against the model's
// own translation. Exactly one of `sentence` and `input_path` is non-empty.
void cmd_attack(const RunConfig& cfg, const std::string& checkpoint, const std::string& sentence,
                const std::string& input_path, const Printer& print);
void cmd_noise(const RunConfig& cfg, const std::string& checkpoint, const std::string& input_path,
               const Printer& print);
// With `hyp_path` and `ref_path`: corpus BLEU of two text files. Otherwise
// the robustness curve of `checkpoint` on the configured test set.
void cmd_eval(const RunConfig& cfg, const std::string& checkpoint, const std::string& hyp_path,
              const std::string& ref_path, const Printer& print);
// `grid` is "switches" (the six loss-term rows) or "ratios" (the 4x4 ratio grid).
void cmd_ablate(const RunConfig& cfg, const std::string& grid, const Printer& print);

ADVSEQ_NAMESPACE_END
