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
#include <optional>
#include <string>
#include <vector>

#include "common/config.h"
#include "data/toy_task.h"
#include "eval/experiments.h"
#include "eval/noise.h"

ADVSEQ_NAMESPACE_BEGIN

// Where training text comes from: a generated toy task or text files.
struct DataConfig {
  std::optional<ToyTaskSpec> toy;
  std::int64_t valid_size = 200;  // toy only
  std::int64_t test_size = 200;   // toy only
  std::string train_src, train_trg;
  std::string valid_src, valid_trg;
  std::string test_src, test_trg;
  std::string src_vocab, trg_vocab;  // optional; built from training text when empty
  int min_count = 1;
};

struct EvalConfig {
  std::vector<double> fractions{0.0, 0.1, 0.2};
};

// Everything a command needs. Serializes to and from a JSON tree; every key
// can be overridden from the command line with a dotted path.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out = "out";
  DataConfig data;
  ExperimentSetup setup;  // model, lm, train, lm pretraining
  NoiseSpec noise;
  EvalConfig eval;

  void validate() const;
};

RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json_text(const RunConfig& cfg);

// Applies `path=value` to the JSON form of `cfg` and re-parses. The value is
// read as JSON when it parses, otherwise as a string.
void apply_override(RunConfig& cfg, const std::string& assignment);

ADVSEQ_NAMESPACE_END
