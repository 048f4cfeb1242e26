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
#include "grad/tensor.h"
#include "lm/bilm.h"
#include "nmt/transformer.h"

ADVSEQ_NAMESPACE_BEGIN

struct NoiseSpec {
  double fraction = 0.1;
  int k = 100;     // noisy candidates generated per sentence
  int pool = 10;   // nearest neighbours a replacement is drawn from
  std::uint64_t seed = 0;

  void validate() const;
};

// For every word id, its `pool` nearest ids by cosine similarity of embedding
// rows, excluding itself and the reserved ids. Reserved ids get empty lists.
class NeighborTable {
 public:
  static NeighborTable build(const Tensor& embeddings, int pool);
  const std::vector<TokenId>& of(TokenId id) const;
  int pool() const { return pool_; }

 private:
  std::vector<std::vector<TokenId>> neighbors_;
  int pool_ = 0;
};

struct NoisyCandidates {
  TokenSeq best;
  std::size_t best_index = 0;
  std::vector<TokenSeq> candidates;
  std::vector<double> scores;  // LM score per candidate
};

// k candidates, each replacing round(fraction * |s|) distinct positions by a
// uniform draw from the word's neighbour pool; keeps the candidate the LM
// scores highest (first on ties). `s` holds content tokens only.
NoisyCandidates make_noisy_candidates(std::span<const TokenId> s, const NoiseSpec& spec,
                                      const NeighborTable& neighbors, const BiLm& lm, Rng& rng);

TokenSeq make_noisy(std::span<const TokenId> s, const NoiseSpec& spec, const Tensor& embeddings,
                    const BiLm& lm);

// Noisy copy of a corpus; sentence i uses a stream derived from (seed, i).
std::vector<TokenSeq> make_noisy_corpus(std::span<const TokenSeq> sentences, const NoiseSpec& spec,
                                        const NeighborTable& neighbors, const BiLm& lm);

// Test inputs at several noise fractions, shared by every model under test.
struct NoisyTestSet {
  std::vector<double> fractions;
  std::vector<std::vector<TokenSeq>> inputs;  // [fraction][sentence], content tokens
  std::vector<TokenSeq> sources;              // clean inputs
  std::vector<TokenSeq> references;           // content tokens
};

NoisyTestSet build_noisy_test_set(std::span<const TokenSeq> sources, std::span<const TokenSeq> references,
                                  std::span<const double> fractions, const NoiseSpec& spec,
                                  const Tensor& embeddings, const BiLm& lm);

struct RobustnessRow {
  double fraction = 0.0;
  double bleu = 0.0;       // against gold references
  double stability = 0.0;  // against the model's own clean-input output
};

struct RobustnessReport {
  std::vector<RobustnessRow> rows;

  std::string to_csv() const;
  std::string to_table(const std::string& title = "") const;
};

// Greedy translations of content-token sources (EOS appended internally).
std::vector<TokenSeq> translate(const Transformer& mt, std::span<const TokenSeq> sources);

RobustnessReport evaluate_robustness(const Transformer& mt, const NoisyTestSet& set);

RobustnessReport robustness_curve(const Transformer& mt, std::span<const TokenSeq> sources,
                                  std::span<const TokenSeq> references,
                                  std::span<const double> fractions, const NoiseSpec& spec,
                                  const BiLm& lm);

ADVSEQ_NAMESPACE_END
