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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "common/config.h"
#include "common/rng.h"
#include "data/sentence.h"
#include "grad/tensor.h"
#include "lm/bilm.h"
#include "nmt/transformer.h"

ADVSEQ_NAMESPACE_BEGIN

struct AdvConfig {
  double gamma_src = 0.25;
  double gamma_trg = 0.50;
  int n = 10;            // candidates kept from the likelihood's top-n
  double lambda = 0.5;   // LM weight in the target likelihood
  std::uint64_t rng_seed = 0;
  std::vector<TokenId> excluded{kPadId, kBosId, kEosId};

  void validate() const;
};

// Replacement candidates for one position: the top-n words under a
// likelihood, minus the original word and the excluded ids. Ordered by
// descending probability, ties by lower id.
struct CandidateSet {
  std::int64_t position = 0;
  std::vector<TokenId> candidates;
};

// Per-position sampling weights over a sentence.
struct PositionDistribution {
  std::vector<double> probs;
};

CandidateSet candidate_set(std::span<const Real> q, TokenId original, int n,
                           std::span<const TokenId> excluded, std::int64_t position = 0);

// Candidate c maximizing cos(e(c) - e_orig, g); ties go to the lower id.
// Returns nullopt for an empty candidate set or a zero gradient. Candidates
// whose embedding equals e_orig have no direction and are skipped.
std::optional<TokenId> select_adversarial_word(const CandidateSet& cands,
                                               std::span<const Real> e_orig,
                                               std::span<const Real> g, const Tensor& embeddings);

// Number of positions to perturb: gamma * eligible rounded to nearest, at
// least one when gamma > 0 and something is eligible.
std::int64_t replacement_budget(double gamma, std::int64_t eligible);

PositionDistribution uniform_positions(std::span<const TokenId> s, std::span<const TokenId> excluded);

// Attention-weighted target positions: P(j) proportional to the attention
// column mass on changed source positions. Excluded target tokens get zero
// mass. When no source position changed, or the changed positions put no
// mass on any eligible target position, falls back to uniform over eligible
// positions and sets `*used_fallback`.
PositionDistribution target_position_distribution(const AttentionMap& attn,
                                                  std::span<const TokenId> x,
                                                  std::span<const TokenId> x_prime,
                                                  std::span<const TokenId> z,
                                                  std::span<const TokenId> excluded,
                                                  bool* used_fallback = nullptr);

// Likelihood over the vocabulary at a given position.
using LikelihoodFn = std::function<std::vector<Real>(std::int64_t position)>;

enum class AdvStatus {
  kOk,
  kNoEligiblePositions,  // positive gamma but the distribution had no mass
};

struct AdvResult {
  TokenSeq sentence;
  AdvStatus status = AdvStatus::kOk;
  std::vector<std::int64_t> sampled;   // positions drawn, in draw order
  std::vector<std::int64_t> changed;   // positions whose word was replaced
  std::vector<CandidateSet> candidate_sets;  // one per sampled position
};

// Greedy gradient-guided replacement. `grads` holds one row of `dim` values
// per position of `s` (the loss gradient wrt that position's embedding).
// All sampled positions are decided from the same gradients.
AdvResult adv_gen(std::span<const TokenId> s, const LikelihoodFn& q, const PositionDistribution& d_pos,
                  std::span<const Real> grads, std::int64_t dim, double gamma, Rng& rng,
                  const Tensor& embeddings, int n, std::span<const TokenId> excluded);

// Source likelihood from the bidirectional LM, one row per position of `s`.
// Special-token positions get a point mass on themselves.
std::vector<std::vector<Real>> q_src(std::span<const TokenId> s, const BiLm& lm);
std::vector<std::vector<std::vector<Real>>> q_src(std::span<const TokenSeq> batch, const BiLm& lm);

// Mixes LM rows with MT next-word rows: lambda * lm + (1 - lambda) * mt.
// `mt_next` is the decoder's [|z|, V] output distribution for input z, so
// position i's MT term is row i - 1 (conditioned on z_<i). Positions holding
// special tokens get a point mass on themselves.
std::vector<std::vector<Real>> mix_target_likelihood(std::span<const TokenId> z,
                                                     const std::vector<std::vector<Real>>& lm_content,
                                                     std::span<const Real> mt_next, double lambda);

std::vector<std::vector<Real>> q_trg(std::span<const TokenId> z, std::span<const TokenId> x_prime,
                                     const BiLm& lm_y, const Transformer& mt, double lambda);

ADVSEQ_NAMESPACE_END
