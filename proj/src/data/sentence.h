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
#include <vector>

#include "common/config.h"
#include "grad/ops.h"

ADVSEQ_NAMESPACE_BEGIN

using TokenSeq = std::vector<TokenId>;

// One training example. x is the EOS-terminated source, y the EOS-terminated
// target and z the decoder input: BOS followed by y without its last token.
struct SentencePair {
  TokenSeq x;
  TokenSeq y;
  TokenSeq z;

  // Builds the pair from content tokens (no specials).
  static SentencePair from_content(std::span<const TokenId> src, std::span<const TokenId> trg);
  // Builds z from y.
  static TokenSeq shift_right(std::span<const TokenId> y);
};

// Checks |z| == |y|, z[0] == BOS and z[j+1] == y[j].
bool z_shift_holds(const SentencePair& pair);

// Strips special tokens; content tokens are what language models see.
TokenSeq content_of(std::span<const TokenId> seq);

// Sequences concatenated row-wise, with a segment per sequence.
struct PackedIds {
  std::vector<TokenId> ids;
  SegmentLayout layout;

  static PackedIds pack(std::span<const TokenSeq> seqs);
  std::int64_t rows() const { return static_cast<std::int64_t>(ids.size()); }
};

ADVSEQ_NAMESPACE_END
