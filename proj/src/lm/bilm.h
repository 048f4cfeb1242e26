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
#include "data/sentence.h"
#include "grad/params.h"
#include "nmt/layers.h"

ADVSEQ_NAMESPACE_BEGIN

struct BiLmConfig {
  int num_layers = 2;
  int model_dim = 64;
  int num_heads = 4;
  int ff_dim = 128;
  int vocab_size = 0;
  int max_len = 64;
  double dropout = 0.1;

  void validate() const;
};

// Bidirectional language model over content tokens (no specials). The
// distribution at position i combines a left-to-right stack that has read
// BOS, s_0..s_{i-1} and a right-to-left stack that has read EOS,
// s_{n-1}..s_{i+1}; s_i itself never enters either context.
class BiLm {
 public:
  // `shared_embedding` is the MT embedding table of the same language and is
  // aliased, not copied. Pass an undefined tensor to create a private table.
  BiLm(BiLmConfig cfg, ParamStore& store, Rng& init_rng, const std::string& prefix,
       Tensor shared_embedding = {});

  const BiLmConfig& config() const { return cfg_; }
  Tensor embedding() const { return embed_; }
  // Every parameter the model reads, the shared embedding first.
  const NamedTensors& parameters() const { return params_; }
  // Parameters registered by this model (excludes an aliased embedding).
  const NamedTensors& own_parameters() const { return own_params_; }

  // Packed [sum |s|, vocab] logits, one row per position of every sentence.
  Tensor position_logits(std::span<const TokenSeq> sentences, const ForwardMode& mode) const;

  std::vector<Real> position_distribution(std::span<const TokenId> s, std::int64_t i) const;
  // Row i is position_distribution(s, i).
  std::vector<std::vector<Real>> position_distributions(std::span<const TokenId> s) const;
  std::vector<std::vector<std::vector<Real>>> position_distributions(
      std::span<const TokenSeq> sentences) const;

  // Mean over sentences of the per-sentence mean token NLL. Empty sentences
  // are skipped.
  Tensor lm_loss(std::span<const TokenSeq> batch, const ForwardMode& mode) const;

  // Mean log-probability of the sentence's tokens.
  double sentence_score(std::span<const TokenId> s) const;
  std::vector<double> sentence_scores(std::span<const TokenSeq> batch) const;

 private:
  void check_sentence(std::span<const TokenId> s) const;
  Tensor run_stack(const std::vector<SelfAttentionBlock>& stack, const LayerNorm& norm,
                   const Tensor& table, const PackedIds& ids, const ForwardMode& mode) const;

  BiLmConfig cfg_;
  Tensor embed_;
  Tensor boundary_;  // [2, dim]: BOS context row, EOS context row
  std::vector<SelfAttentionBlock> forward_stack_;
  std::vector<SelfAttentionBlock> backward_stack_;
  LayerNorm forward_norm_, backward_norm_;
  Linear combine_;
  Linear output_;
  PositionalTable positions_;
  NamedTensors params_;
  NamedTensors own_params_;
};

struct LmPretrainConfig {
  std::int64_t steps = 0;
  std::int64_t batch_sentences = 32;
  AdamConfig adam;
  std::uint64_t seed = 0;
};

// Trains all of the LM's parameters (including a shared embedding table) on
// monolingual content sentences. Returns the per-step loss trace.
std::vector<double> pretrain(BiLm& lm, std::span<const TokenSeq> corpus,
                             const LmPretrainConfig& cfg);

ADVSEQ_NAMESPACE_END
