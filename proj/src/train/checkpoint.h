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

#include <string>

#include "common/config.h"
#include "train/trainer.h"

ADVSEQ_NAMESPACE_BEGIN

// Binary checkpoint: a text manifest (one `name dtype ndim dims...` line per
// entry) followed by the raw little-endian payloads in manifest order.
// Holds every parameter, the optimizer moments, the step counter and the
// dropout stream. Embedding sharing is not stored; it is rebuilt by the
// TrainState constructor.
void save_checkpoint(const TrainState& state, const std::string& path);

// Restores into a state constructed from the same configuration. Shape or
// name mismatches raise a format error that names the offending tensor.
void load_checkpoint(const std::string& path, TrainState& state);

// Restores only the parameters whose names start with `prefix` (for example
// "lm_x." together with the embedding it aliases). Extra entries are ignored.
void load_parameters(const std::string& path, TrainState& state, const std::string& prefix);

ADVSEQ_NAMESPACE_END
