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
#include <string>
#include <vector>

#include "common/config.h"
#include "common/rng.h"
#include "data/corpus.h"

ADVSEQ_NAMESPACE_BEGIN

enum class ToyKind {
  kCipher,           // target j = cipher(source j)
  kReverse,          // target = reversed cipher of the source
  kCipherLocalSwap,  // cipher, then swap pairs (2k, 2k+1) led by a trigger word
};

ToyKind parse_toy_kind(const std::string& name);
std::string toy_kind_name(ToyKind kind);

// Synthetic translation task with a known ground-truth mapping. Source
// sentences come from a sparse first-order Markov chain, so every word is
// predictable from its neighbours the way natural-language words are; the
// target side is a deterministic function of the source.
class ToyTask {
 public:
  // `vocab_size` content words per language, each with `branching` possible
  // successors.
  static ToyTask create(ToyKind kind, int vocab_size, std::uint64_t seed, int branching = 4);

  ToyKind kind() const { return kind_; }
  int vocab_size() const { return vocab_size_; }

  Tokens sample_source(std::int64_t length, Rng& rng) const;
  Tokens translate(const Tokens& source) const;
  ParallelText sample(std::int64_t count, std::int64_t min_len, std::int64_t max_len,
                      std::uint64_t sample_seed) const;

  static std::string source_word(int index) { return "s" + std::to_string(index); }
  static std::string target_word(int index) { return "t" + std::to_string(index); }

  int cipher(int source_index) const { return cipher_[static_cast<std::size_t>(source_index)]; }
  bool is_trigger(int source_index) const { return trigger_[static_cast<std::size_t>(source_index)]; }

 private:
  ToyKind kind_ = ToyKind::kCipher;
  int vocab_size_ = 0;
  std::vector<int> cipher_;
  std::vector<bool> trigger_;
  std::vector<std::vector<int>> successors_;
  std::vector<std::vector<double>> successor_cdf_;
};

struct ToyTaskSpec {
  ToyKind kind = ToyKind::kCipherLocalSwap;
  int vocab_size = 200;
  std::int64_t corpus_size = 5000;
  std::int64_t min_len = 6;
  std::int64_t max_len = 14;
  std::uint64_t seed = 1;
  int branching = 4;
};

// Training corpus of `corpus_size` pairs drawn from the task built by `seed`.
ParallelText make_toy_task(const ToyTaskSpec& spec);

struct ToySplits {
  ParallelText train, valid, test;
};

// Training corpus plus held-out samples of the same task, each drawn from its
// own stream.
ToySplits make_toy_splits(const ToyTaskSpec& spec, std::int64_t valid_size, std::int64_t test_size);

ADVSEQ_NAMESPACE_END
