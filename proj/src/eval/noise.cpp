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

#include "eval/noise.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "common/error.h"
#include "eval/bleu.h"

ADVSEQ_NAMESPACE_BEGIN

namespace {

constexpr std::size_t kDecodeChunk = 256;

}  // namespace

void NoiseSpec::validate() const {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    fail(ErrorCode::kConfig, "noise fraction must lie in [0, 1], got " + std::to_string(fraction));
  }
  if (k < 1) fail(ErrorCode::kConfig, "noise.k must be >= 1, got " + std::to_string(k));
  if (pool < 1) fail(ErrorCode::kConfig, "noise.pool must be >= 1, got " + std::to_string(pool));
}

NeighborTable NeighborTable::build(const Tensor& embeddings, int pool) {
  if (embeddings.rank() != 2) fail(ErrorCode::kDimension, "embedding table must be rank 2");
  const std::int64_t vocab = embeddings.dim(0), dim = embeddings.dim(1);
  const auto e = embeddings.data();
  std::vector<double> norms(static_cast<std::size_t>(vocab), 0.0);
  for (std::int64_t v = 0; v < vocab; ++v) {
    double acc = 0.0;
    for (std::int64_t k = 0; k < dim; ++k) acc += static_cast<double>(e[v * dim + k]) * e[v * dim + k];
    norms[static_cast<std::size_t>(v)] = std::sqrt(acc);
  }
  NeighborTable t;
  t.pool_ = pool;
  t.neighbors_.resize(static_cast<std::size_t>(vocab));
  std::vector<std::pair<double, TokenId>> sims;
  for (std::int64_t v = kNumReserved; v < vocab; ++v) {
    sims.clear();
    for (std::int64_t u = kNumReserved; u < vocab; ++u) {
      if (u == v) continue;
      double dot = 0.0;
      for (std::int64_t k = 0; k < dim; ++k) dot += static_cast<double>(e[v * dim + k]) * e[u * dim + k];
      const double denom = norms[static_cast<std::size_t>(v)] * norms[static_cast<std::size_t>(u)];
      sims.emplace_back(denom > 0.0 ? dot / denom : 0.0, static_cast<TokenId>(u));
    }
    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(pool), sims.size());
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(keep), sims.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    auto& out = t.neighbors_[static_cast<std::size_t>(v)];
    for (std::size_t i = 0; i < keep; ++i) out.push_back(sims[i].second);
  }
  return t;
}

const std::vector<TokenId>& NeighborTable::of(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= neighbors_.size()) {
    fail(ErrorCode::kVocabulary, "token id " + std::to_string(id) + " outside neighbour table of " +
                                     std::to_string(neighbors_.size()));
  }
  return neighbors_[static_cast<std::size_t>(id)];
}

NoisyCandidates make_noisy_candidates(std::span<const TokenId> s, const NoiseSpec& spec,
                                      const NeighborTable& neighbors, const BiLm& lm, Rng& rng) {
  spec.validate();
  NoisyCandidates out;
  const TokenSeq original(s.begin(), s.end());
  const auto n = static_cast<std::int64_t>(s.size());
  const auto budget = static_cast<std::int64_t>(std::llround(spec.fraction * static_cast<double>(n)));
  std::vector<std::int64_t> positions(static_cast<std::size_t>(n));
  for (int c = 0; c < spec.k; ++c) {
    TokenSeq cand = original;
    std::iota(positions.begin(), positions.end(), 0);
    for (std::int64_t j = 0; j < budget; ++j) {
      // Partial Fisher-Yates: positions[j] becomes a fresh uniform pick.
      const auto pick = j + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n - j)));
      std::swap(positions[static_cast<std::size_t>(j)], positions[static_cast<std::size_t>(pick)]);
      const auto pos = static_cast<std::size_t>(positions[static_cast<std::size_t>(j)]);
      const auto& pool = neighbors.of(original[pos]);
      if (pool.empty()) continue;
      cand[pos] = pool[rng.below(pool.size())];
    }
    out.candidates.push_back(std::move(cand));
  }
  if (budget == 0 || original.empty()) {
    // Every candidate is the input itself.
    const double score = original.empty() ? 0.0 : lm.sentence_score(original);
    out.scores.assign(out.candidates.size(), score);
  } else {
    out.scores = lm.sentence_scores(out.candidates);
  }
  for (std::size_t i = 1; i < out.scores.size(); ++i) {
    if (out.scores[i] > out.scores[out.best_index]) out.best_index = i;
  }
  out.best = out.candidates[out.best_index];
  return out;
}

TokenSeq make_noisy(std::span<const TokenId> s, const NoiseSpec& spec, const Tensor& embeddings,
                    const BiLm& lm) {
  const NeighborTable table = NeighborTable::build(embeddings, spec.pool);
  Rng rng(spec.seed);
  return make_noisy_candidates(s, spec, table, lm, rng).best;
}

std::vector<TokenSeq> make_noisy_corpus(std::span<const TokenSeq> sentences, const NoiseSpec& spec,
                                        const NeighborTable& neighbors, const BiLm& lm) {
  std::vector<TokenSeq> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    out.push_back(make_noisy_candidates(sentences[i], spec, neighbors, lm, rng).best);
  }
  return out;
}

NoisyTestSet build_noisy_test_set(std::span<const TokenSeq> sources, std::span<const TokenSeq> references,
                                  std::span<const double> fractions, const NoiseSpec& spec,
                                  const Tensor& embeddings, const BiLm& lm) {
  if (sources.size() != references.size()) {
    fail(ErrorCode::kData, "test set has " + std::to_string(sources.size()) + " sources and " +
                               std::to_string(references.size()) + " references");
  }
  NoisyTestSet set;
  set.fractions.assign(fractions.begin(), fractions.end());
  set.sources.assign(sources.begin(), sources.end());
  set.references.assign(references.begin(), references.end());
  const NeighborTable table = NeighborTable::build(embeddings, spec.pool);
  for (std::size_t f = 0; f < fractions.size(); ++f) {
    NoiseSpec at = spec;
    at.fraction = fractions[f];
    at.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(f));
    if (fractions[f] == 0.0) {
      set.inputs.emplace_back(sources.begin(), sources.end());
    } else {
      set.inputs.push_back(make_noisy_corpus(sources, at, table, lm));
    }
  }
  return set;
}

std::vector<TokenSeq> translate(const Transformer& mt, std::span<const TokenSeq> sources) {
  std::vector<TokenSeq> out;
  out.reserve(sources.size());
  for (std::size_t start = 0; start < sources.size(); start += kDecodeChunk) {
    const std::size_t end = std::min(sources.size(), start + kDecodeChunk);
    std::vector<TokenSeq> xs;
    std::size_t longest = 0;
    for (std::size_t i = start; i < end; ++i) {
      TokenSeq x = sources[i];
      x.push_back(kEosId);
      longest = std::max(longest, x.size());
      xs.push_back(std::move(x));
    }
    auto ys = mt.greedy_decode(xs, static_cast<int>(2 * longest + 10));
    for (auto& y : ys) out.push_back(std::move(y));
  }
  return out;
}

RobustnessReport evaluate_robustness(const Transformer& mt, const NoisyTestSet& set) {
  RobustnessReport report;
  if (set.references.empty()) fail(ErrorCode::kData, "robustness test set is empty");
  std::vector<std::vector<TokenSeq>> outputs(set.fractions.size());
  for (std::size_t f = 0; f < set.fractions.size(); ++f) outputs[f] = translate(mt, set.inputs[f]);
  // The clean-input output is the stability reference, even when 0.0 is not
  // one of the requested fractions.
  const auto zero = std::find(set.fractions.begin(), set.fractions.end(), 0.0);
  const std::vector<TokenSeq> clean_out =
      zero != set.fractions.end() ? outputs[static_cast<std::size_t>(zero - set.fractions.begin())]
                                  : translate(mt, set.sources);
  for (std::size_t f = 0; f < set.fractions.size(); ++f) {
    RobustnessRow row;
    row.fraction = set.fractions[f];
    row.bleu = bleu(outputs[f], set.references);
    row.stability = bleu(outputs[f], clean_out);
    report.rows.push_back(row);
  }
  return report;
}

RobustnessReport robustness_curve(const Transformer& mt, std::span<const TokenSeq> sources,
                                  std::span<const TokenSeq> references,
                                  std::span<const double> fractions, const NoiseSpec& spec,
                                  const BiLm& lm) {
  const NoisyTestSet set =
      build_noisy_test_set(sources, references, fractions, spec, mt.source_embedding(), lm);
  return evaluate_robustness(mt, set);
}

std::string RobustnessReport::to_csv() const {
  std::ostringstream os;
  os << "fraction,bleu,stability\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.2f\n", r.fraction, r.bleu, r.stability);
    os << buf;
  }
  return os.str();
}

std::string RobustnessReport::to_table(const std::string& title) const {
  std::ostringstream os;
  if (!title.empty()) os << title << '\n';
  os << "fraction |   BLEU | stability\n";
  os << "---------+--------+----------\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%8.2f | %6.2f | %9.2f\n", r.fraction, r.bleu, r.stability);
    os << buf;
  }
  return os.str();
}

ADVSEQ_NAMESPACE_END
