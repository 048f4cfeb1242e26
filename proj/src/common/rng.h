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
#include <random>
#include <string_view>

#include "common/config.h"

ADVSEQ_NAMESPACE_BEGIN

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed from a parent seed and a component tag.
// Every random consumer in the toolkit gets its seed this way, so enabling or
// disabling one component never shifts another component's stream.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

// Thin wrapper over mt19937_64 with distribution code written out by hand so
// that streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  std::mt19937_64& engine() { return engine_; }
  const std::mt19937_64& engine() const { return engine_; }

 private:
  std::mt19937_64 engine_;
};

template <typename It>
void shuffle_range(It first, It last, Rng& rng) {
  auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    auto j = rng.below(i);
    std::swap(first[i - 1], first[j]);
  }
}

ADVSEQ_NAMESPACE_END
