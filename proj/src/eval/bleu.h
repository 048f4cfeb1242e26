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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "common/config.h"
#include "data/sentence.h"
#include "data/vocab.h"

ADVSEQ_NAMESPACE_BEGIN

inline constexpr int kMaxBleuOrder = 4;

// Sufficient statistics for corpus BLEU.
struct BleuStats {
  std::array<std::int64_t, kMaxBleuOrder> matches{};
  std::array<std::int64_t, kMaxBleuOrder> totals{};
  std::int64_t hyp_len = 0;
  std::int64_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& o);
};

BleuStats bleu_stats(std::span<const std::string> hyp, std::span<const std::string> ref, int max_n);
BleuStats bleu_stats(std::span<const TokenId> hyp, std::span<const TokenId> ref, int max_n);

// Score in [0, 100] from accumulated statistics. Orders the hypothesis never
// reaches (shorter than n everywhere) are left out of the geometric mean; any
// other zero precision gives 0. With `smooth`, orders 2..n use add-one counts.
double bleu_from_stats(const BleuStats& stats, int max_n, bool smooth = false);

// Corpus BLEU over tokenized, case-folded text. Counts must match and the
// corpus must be nonempty.
double bleu(std::span<const Tokens> hypotheses, std::span<const Tokens> references,
            int max_n = kMaxBleuOrder);
// Same over token ids (no case folding needed).
double bleu(std::span<const TokenSeq> hypotheses, std::span<const TokenSeq> references,
            int max_n = kMaxBleuOrder);

// Add-one smoothed single-sentence score, for inspection output only.
double sentence_bleu(std::span<const std::string> hypothesis, std::span<const std::string> reference,
                     int max_n = kMaxBleuOrder);

ADVSEQ_NAMESPACE_END
