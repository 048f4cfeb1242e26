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

#include "adv/advgen.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "common/error.h"
#include "grad/ops.h"

ADVSEQ_NAMESPACE_BEGIN

namespace {

bool is_excluded(TokenId id, std::span<const TokenId> excluded) {
  return std::find(excluded.begin(), excluded.end(), id) != excluded.end();
}

std::vector<Real> point_mass(TokenId id, std::int64_t vocab) {
  std::vector<Real> row(static_cast<std::size_t>(vocab), Real(0));
  if (id >= 0 && id < vocab) row[static_cast<std::size_t>(id)] = Real(1);
  return row;
}

}  // namespace

void AdvConfig::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(gamma_src) || !in_unit(gamma_trg)) {
    fail(ErrorCode::kConfig, "adversarial ratios must lie in [0, 1], got gamma_src=" +
                                 std::to_string(gamma_src) + " gamma_trg=" + std::to_string(gamma_trg));
  }
  if (n < 1) fail(ErrorCode::kConfig, "candidate count n must be >= 1, got " + std::to_string(n));
  if (!in_unit(lambda)) {
    fail(ErrorCode::kConfig, "lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
}

CandidateSet candidate_set(std::span<const Real> q, TokenId original, int n,
                           std::span<const TokenId> excluded, std::int64_t position) {
  if (n < 0) fail(ErrorCode::kContract, "candidate count must be non-negative");
  std::vector<TokenId> order(q.size());
  std::iota(order.begin(), order.end(), TokenId(0));
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(n), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](TokenId a, TokenId b) {
                      const Real qa = q[static_cast<std::size_t>(a)];
                      const Real qb = q[static_cast<std::size_t>(b)];
                      return qa != qb ? qa > qb : a < b;
                    });
  CandidateSet out;
  out.position = position;
  for (std::size_t k = 0; k < keep; ++k) {
    const TokenId c = order[k];
    if (c == original || is_excluded(c, excluded)) continue;
    out.candidates.push_back(c);
  }
  return out;
}

std::optional<TokenId> select_adversarial_word(const CandidateSet& cands,
                                               std::span<const Real> e_orig,
                                               std::span<const Real> g, const Tensor& embeddings) {
  const std::int64_t dim = embeddings.dim(1);
  if (static_cast<std::int64_t>(e_orig.size()) != dim || static_cast<std::int64_t>(g.size()) != dim) {
    fail(ErrorCode::kDimension, "embedding/gradient width mismatch: table dim " + std::to_string(dim) +
                                    ", e_orig " + std::to_string(e_orig.size()) + ", g " +
                                    std::to_string(g.size()));
  }
  double g_norm = 0.0;
  for (auto v : g) g_norm += static_cast<double>(v) * v;
  g_norm = std::sqrt(g_norm);
  if (cands.candidates.empty() || g_norm == 0.0) return std::nullopt;

  const auto table = embeddings.data();
  const std::int64_t vocab = embeddings.dim(0);
  std::optional<TokenId> best;
  double best_score = 0.0;
  for (TokenId c : cands.candidates) {
    if (c < 0 || c >= vocab) {
      fail(ErrorCode::kVocabulary, "candidate id " + std::to_string(c) + " outside vocabulary of " +
                                       std::to_string(vocab));
    }
    const Real* row = table.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(dim);
    double dot = 0.0, norm = 0.0;
    for (std::int64_t k = 0; k < dim; ++k) {
      const double diff = static_cast<double>(row[k]) - e_orig[static_cast<std::size_t>(k)];
      dot += diff * g[static_cast<std::size_t>(k)];
      norm += diff * diff;
    }
    if (norm == 0.0) continue;
    const double score = dot / (std::sqrt(norm) * g_norm);
    if (!best || score > best_score || (score == best_score && c < *best)) {
      best = c;
      best_score = score;
    }
  }
  return best;
}

std::int64_t replacement_budget(double gamma, std::int64_t eligible) {
  if (gamma <= 0.0 || eligible <= 0) return 0;
  const auto k = static_cast<std::int64_t>(std::llround(gamma * static_cast<double>(eligible)));
  return std::clamp<std::int64_t>(k, 1, eligible);
}

PositionDistribution uniform_positions(std::span<const TokenId> s, std::span<const TokenId> excluded) {
  PositionDistribution d;
  d.probs.assign(s.size(), 0.0);
  std::size_t count = 0;
  for (auto id : s) count += is_excluded(id, excluded) ? 0 : 1;
  if (count == 0) return d;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_excluded(s[i], excluded)) d.probs[i] = 1.0 / static_cast<double>(count);
  }
  return d;
}

PositionDistribution target_position_distribution(const AttentionMap& attn,
                                                  std::span<const TokenId> x,
                                                  std::span<const TokenId> x_prime,
                                                  std::span<const TokenId> z,
                                                  std::span<const TokenId> excluded,
                                                  bool* used_fallback) {
  if (x.size() != x_prime.size()) {
    fail(ErrorCode::kLength, "perturbed source length " + std::to_string(x_prime.size()) +
                                 " differs from source length " + std::to_string(x.size()));
  }
  if (attn.src_len != static_cast<std::int64_t>(x.size()) ||
      attn.trg_len != static_cast<std::int64_t>(z.size())) {
    fail(ErrorCode::kDimension, "attention map is " + std::to_string(attn.src_len) + "x" +
                                    std::to_string(attn.trg_len) + " but sentences are " +
                                    std::to_string(x.size()) + "x" + std::to_string(z.size()));
  }
  PositionDistribution d;
  d.probs.assign(z.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == x_prime[i]) continue;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (is_excluded(z[j], excluded)) continue;
      const double w = attn(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j));
      d.probs[j] += w;
      total += w;
    }
  }
  if (total > 0.0) {
    for (auto& p : d.probs) p /= total;
    if (used_fallback) *used_fallback = false;
    return d;
  }
  if (used_fallback) *used_fallback = true;
  return uniform_positions(z, excluded);
}

AdvResult adv_gen(std::span<const TokenId> s, const LikelihoodFn& q, const PositionDistribution& d_pos,
                  std::span<const Real> grads, std::int64_t dim, double gamma, Rng& rng,
                  const Tensor& embeddings, int n, std::span<const TokenId> excluded) {
  if (d_pos.probs.size() != s.size()) {
    fail(ErrorCode::kLength, "position distribution has " + std::to_string(d_pos.probs.size()) +
                                 " entries for a sentence of " + std::to_string(s.size()));
  }
  if (grads.size() != s.size() * static_cast<std::size_t>(dim)) {
    fail(ErrorCode::kDimension, "gradient buffer holds " + std::to_string(grads.size()) +
                                    " values, expected " + std::to_string(s.size()) + "x" +
                                    std::to_string(dim));
  }
  AdvResult out;
  out.sentence.assign(s.begin(), s.end());

  std::int64_t eligible = 0;
  std::vector<double> weights(s.size(), 0.0);
  std::int64_t positive = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_excluded(s[i], excluded)) continue;
    ++eligible;
    weights[i] = std::max(0.0, d_pos.probs[i]);
    positive += weights[i] > 0.0 ? 1 : 0;
  }
  const std::int64_t budget = std::min(replacement_budget(gamma, eligible), positive);
  if (gamma > 0.0 && budget == 0) {
    out.status = AdvStatus::kNoEligiblePositions;
    return out;
  }

  // Weighted draws without replacement.
  for (std::int64_t k = 0; k < budget; ++k) {
    double total = 0.0;
    for (auto w : weights) total += w;
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = s.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      acc += weights[i];
      pick = i;
      if (u < acc) break;
    }
    weights[pick] = 0.0;
    out.sampled.push_back(static_cast<std::int64_t>(pick));
  }

  const auto table = embeddings.data();
  for (auto pos : out.sampled) {
    const TokenId original = s[static_cast<std::size_t>(pos)];
    const std::vector<Real> likelihood = q(pos);
    CandidateSet cands = candidate_set(likelihood, original, n, excluded, pos);
    const std::span<const Real> e_orig(table.data() + static_cast<std::size_t>(original) *
                                                          static_cast<std::size_t>(dim),
                                       static_cast<std::size_t>(dim));
    const auto g = grads.subspan(static_cast<std::size_t>(pos * dim), static_cast<std::size_t>(dim));
    if (auto word = select_adversarial_word(cands, e_orig, g, embeddings)) {
      out.sentence[static_cast<std::size_t>(pos)] = *word;
      out.changed.push_back(pos);
    }
    out.candidate_sets.push_back(std::move(cands));
  }
  return out;
}

std::vector<std::vector<Real>> q_src(std::span<const TokenId> s, const BiLm& lm) {
  const TokenSeq one(s.begin(), s.end());
  return q_src(std::span<const TokenSeq>(&one, 1), lm).front();
}

std::vector<std::vector<std::vector<Real>>> q_src(std::span<const TokenSeq> batch, const BiLm& lm) {
  std::vector<TokenSeq> contents;
  contents.reserve(batch.size());
  for (const auto& s : batch) contents.push_back(content_of(s));
  std::vector<TokenSeq> nonempty;
  for (const auto& c : contents) {
    if (!c.empty()) nonempty.push_back(c);
  }
  auto dists = lm.position_distributions(nonempty);
  const std::int64_t vocab = lm.config().vocab_size;

  std::vector<std::vector<std::vector<Real>>> out(batch.size());
  std::size_t next = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& s = batch[b];
    std::vector<std::vector<Real>>* content_rows = contents[b].empty() ? nullptr : &dists[next++];
    std::size_t c = 0;
    out[b].reserve(s.size());
    for (auto id : s) {
      if (is_special(id)) {
        out[b].push_back(point_mass(id, vocab));
      } else {
        out[b].push_back(std::move((*content_rows)[c++]));
      }
    }
  }
  return out;
}

std::vector<std::vector<Real>> mix_target_likelihood(std::span<const TokenId> z,
                                                     const std::vector<std::vector<Real>>& lm_rows,
                                                     std::span<const Real> mt_next, double lambda) {
  if (z.empty()) return {};
  const std::size_t vocab = mt_next.size() / z.size();
  if (vocab * z.size() != mt_next.size()) {
    fail(ErrorCode::kDimension, "decoder distribution size " + std::to_string(mt_next.size()) +
                                    " is not a multiple of |z|=" + std::to_string(z.size()));
  }
  if (lm_rows.size() != z.size()) {
    fail(ErrorCode::kLength, "LM rows " + std::to_string(lm_rows.size()) + " vs |z| " +
                                 std::to_string(z.size()));
  }
  std::vector<std::vector<Real>> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (is_special(z[i]) || i == 0) {
      out[i] = point_mass(z[i], static_cast<std::int64_t>(vocab));
      continue;
    }
    if (lm_rows[i].size() != vocab) {
      fail(ErrorCode::kDimension, "LM vocabulary " + std::to_string(lm_rows[i].size()) +
                                      " differs from decoder vocabulary " + std::to_string(vocab));
    }
    const Real* mt = mt_next.data() + (i - 1) * vocab;
    out[i].resize(vocab);
    for (std::size_t v = 0; v < vocab; ++v) {
      out[i][v] = static_cast<Real>(lambda * lm_rows[i][v] + (1.0 - lambda) * mt[v]);
    }
  }
  return out;
}

std::vector<std::vector<Real>> q_trg(std::span<const TokenId> z, std::span<const TokenId> x_prime,
                                     const BiLm& lm_y, const Transformer& mt, double lambda) {
  NoGradScope no_grad;
  const TokenSeq xs(x_prime.begin(), x_prime.end());
  const TokenSeq zs(z.begin(), z.end());
  const auto x_ids = PackedIds::pack(std::span<const TokenSeq>(&xs, 1));
  const auto z_ids = PackedIds::pack(std::span<const TokenSeq>(&zs, 1));
  const auto probs = softmax(mt.forward(x_ids, z_ids, ForwardMode::eval(), false).logits, 1);
  const auto lm_rows = q_src(z, lm_y);
  return mix_target_likelihood(z, lm_rows, probs.data(), lambda);
}

ADVSEQ_NAMESPACE_END
