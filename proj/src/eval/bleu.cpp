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

#include "eval/bleu.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "common/error.h"

ADVSEQ_NAMESPACE_BEGIN

namespace {

template <typename T>
BleuStats stats_of(std::span<const T> hyp, std::span<const T> ref, int max_n) {
  BleuStats s;
  s.hyp_len = static_cast<std::int64_t>(hyp.size());
  s.ref_len = static_cast<std::int64_t>(ref.size());
  for (int n = 1; n <= max_n; ++n) {
    std::map<std::vector<T>, std::int64_t> ref_counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= ref.size(); ++i) {
      ++ref_counts[std::vector<T>(ref.begin() + i, ref.begin() + i + n)];
    }
    std::map<std::vector<T>, std::int64_t> hyp_counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= hyp.size(); ++i) {
      ++hyp_counts[std::vector<T>(hyp.begin() + i, hyp.begin() + i + n)];
    }
    std::int64_t matched = 0, total = 0;
    for (const auto& [gram, count] : hyp_counts) {
      total += count;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    s.matches[static_cast<std::size_t>(n - 1)] = matched;
    s.totals[static_cast<std::size_t>(n - 1)] = total;
  }
  return s;
}

Tokens lowercase(std::span<const std::string> words) {
  Tokens out;
  out.reserve(words.size());
  for (const auto& w : words) {
    std::string l(w);
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(std::move(l));
  }
  return out;
}

void check_order(int max_n) {
  if (max_n < 1 || max_n > kMaxBleuOrder) {
    fail(ErrorCode::kContract, "BLEU order must be in [1, " + std::to_string(kMaxBleuOrder) + "]");
  }
}

template <typename Seq>
void check_corpus(std::span<const Seq> hyps, std::span<const Seq> refs) {
  if (hyps.empty() && refs.empty()) fail(ErrorCode::kContract, "BLEU of an empty corpus is undefined");
  if (hyps.size() != refs.size()) {
    fail(ErrorCode::kContract, "BLEU needs one reference per hypothesis, got " +
                                   std::to_string(hyps.size()) + " hypotheses and " +
                                   std::to_string(refs.size()) + " references");
  }
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (int n = 0; n < kMaxBleuOrder; ++n) {
    matches[static_cast<std::size_t>(n)] += o.matches[static_cast<std::size_t>(n)];
    totals[static_cast<std::size_t>(n)] += o.totals[static_cast<std::size_t>(n)];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

BleuStats bleu_stats(std::span<const std::string> hyp, std::span<const std::string> ref, int max_n) {
  check_order(max_n);
  const Tokens h = lowercase(hyp), r = lowercase(ref);
  return stats_of<std::string>(h, r, max_n);
}

BleuStats bleu_stats(std::span<const TokenId> hyp, std::span<const TokenId> ref, int max_n) {
  check_order(max_n);
  return stats_of<TokenId>(hyp, ref, max_n);
}

double bleu_from_stats(const BleuStats& s, int max_n, bool smooth) {
  check_order(max_n);
  if (s.hyp_len == 0) return s.ref_len == 0 ? 100.0 : 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    double m = static_cast<double>(s.matches[static_cast<std::size_t>(n - 1)]);
    double t = static_cast<double>(s.totals[static_cast<std::size_t>(n - 1)]);
    if (smooth && n >= 2) {
      m += 1.0;
      t += 1.0;
    }
    if (t == 0.0) continue;
    if (m == 0.0) return 0.0;
    log_sum += std::log(m / t);
    ++orders;
  }
  const double precision = orders > 0 ? std::exp(log_sum / orders) : 0.0;
  const double c = static_cast<double>(s.hyp_len), r = static_cast<double>(s.ref_len);
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return 100.0 * bp * precision;
}

double bleu(std::span<const Tokens> hypotheses, std::span<const Tokens> references, int max_n) {
  check_corpus(hypotheses, references);
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) total += bleu_stats(hypotheses[i], references[i], max_n);
  return bleu_from_stats(total, max_n);
}

double bleu(std::span<const TokenSeq> hypotheses, std::span<const TokenSeq> references, int max_n) {
  check_corpus(hypotheses, references);
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) total += bleu_stats(hypotheses[i], references[i], max_n);
  return bleu_from_stats(total, max_n);
}

double sentence_bleu(std::span<const std::string> hypothesis, std::span<const std::string> reference,
                     int max_n) {
  return bleu_from_stats(bleu_stats(hypothesis, reference, max_n), max_n, /*smooth=*/true);
}

ADVSEQ_NAMESPACE_END
