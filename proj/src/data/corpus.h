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
#include <span>
#include <string>
#include <vector>

#include "common/config.h"
#include "common/rng.h"
#include "data/sentence.h"
#include "data/vocab.h"

ADVSEQ_NAMESPACE_BEGIN

// Tokenized parallel text, aligned by index.
struct ParallelText {
  std::vector<Tokens> src;
  std::vector<Tokens> trg;

  std::size_t size() const { return src.size(); }
};

std::vector<Tokens> read_lines(const std::string& path);
void write_lines(const std::string& path, std::span<const Tokens> lines);

ParallelText load_parallel_text(const std::string& src_path, const std::string& trg_path);
std::vector<SentencePair> encode_parallel(const ParallelText& text, const Vocab& src_vocab,
                                          const Vocab& trg_vocab);
std::vector<SentencePair> load_parallel(const std::string& src_path, const std::string& trg_path,
                                        const Vocab& src_vocab, const Vocab& trg_vocab);

// Padded view of a group of pairs.
struct Batch {
  std::int64_t size = 0;
  std::int64_t x_width = 0;
  std::int64_t y_width = 0;
  std::vector<TokenId> x;  // [size, x_width], kPadId fill
  std::vector<TokenId> z;  // [size, y_width]
  std::vector<TokenId> y;  // [size, y_width]
  std::vector<std::uint8_t> x_pad;  // 1 where x is padding
  std::vector<std::uint8_t> y_pad;  // 1 where y and z are padding
  std::vector<std::int64_t> x_len;
  std::vector<std::int64_t> y_len;
  std::vector<std::size_t> indices;  // positions in the source pair list

  // Unpadded pairs, in batch order.
  std::vector<SentencePair> pairs() const;
  // Padded cells counted over the wider side.
  std::int64_t padded_tokens() const { return size * std::max(x_width, y_width); }
};

Batch make_batch(std::span<const SentencePair> pairs, std::span<const std::size_t> indices);

// One epoch of length-bucketed batches: pairs of similar length are grouped
// so that each batch's padded size stays within `token_budget` (a single
// overlong pair forms its own batch), then batch order is shuffled. Every pair
// appears exactly once.
std::vector<Batch> epoch_batches(std::span<const SentencePair> pairs, std::int64_t token_budget,
                                 std::uint64_t shuffle_seed);

// Endless stream of batches; epoch e uses a seed derived from (seed, e).
class BatchStream {
 public:
  BatchStream(std::span<const SentencePair> pairs, std::int64_t token_budget, std::uint64_t seed);
  const Batch& next();
  std::int64_t epoch() const { return epoch_; }

 private:
  std::span<const SentencePair> pairs_;
  std::int64_t budget_;
  std::uint64_t seed_;
  std::int64_t epoch_ = -1;
  std::vector<Batch> current_;
  std::size_t cursor_ = 0;
};

ADVSEQ_NAMESPACE_END
