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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common/config.h"
#include "data/sentence.h"
#include "grad/params.h"
#include "nmt/layers.h"

ADVSEQ_NAMESPACE_BEGIN

struct TransformerConfig {
  int num_layers = 2;
  int model_dim = 64;
  int num_heads = 4;
  int ff_dim = 128;
  int src_vocab_size = 0;
  int trg_vocab_size = 0;
  int max_len = 64;
  double dropout = 0.1;
  // Decoder layer whose cross-attention feeds AttentionMap; negative counts
  // from the top (-1 is the final layer).
  int attention_layer = -1;

  void validate() const;
};

// Encoder-decoder attention for one sentence pair, head-averaged.
// weights[i * trg_len + j] is the attention target position j pays to
// source position i, so each target column sums to one.
struct AttentionMap {
  std::int64_t src_len = 0;
  std::int64_t trg_len = 0;
  std::vector<Real> weights;

  Real operator()(std::int64_t i, std::int64_t j) const {
    return weights[static_cast<std::size_t>(i * trg_len + j)];
  }
};

struct DecodeResult {
  Tensor logits;                        // [|z|, trg_vocab]
  std::vector<AttentionMap> attention;  // one per segment; empty unless requested
};

enum class LossReduction {
  kMeanOverPairs,  // mean of per-pair token-mean NLL
  kSumOverPairs,   // sum of per-pair token-mean NLL
};

// Gradient of one pair's translation loss with respect to its input
// embedding vectors, plus by-products of the same forward pass.
struct InputGradients {
  Real loss = 0;
  std::int64_t dim = 0;
  std::vector<Real> source;  // [|x|, dim]: row i is the gradient wrt e(x_i)
  std::vector<Real> target;  // [|z|, dim]: row j is the gradient wrt e(z_j)
  AttentionMap attention;
  std::vector<Real> next_token_probs;  // [|z|, trg_vocab] when requested

  std::span<const Real> source_row(std::int64_t i) const {
    return std::span<const Real>(source).subspan(static_cast<std::size_t>(i * dim),
                                                 static_cast<std::size_t>(dim));
  }
  std::span<const Real> target_row(std::int64_t j) const {
    return std::span<const Real>(target).subspan(static_cast<std::size_t>(j * dim),
                                                 static_cast<std::size_t>(dim));
  }
};

class Transformer {
 public:
  // Registers parameters under `prefix` in `store`.
  Transformer(TransformerConfig cfg, ParamStore& store, Rng& init_rng,
              const std::string& prefix = "mt");

  const TransformerConfig& config() const { return cfg_; }
  Tensor source_embedding() const { return src_embed_; }
  Tensor target_embedding() const { return trg_embed_; }
  const NamedTensors& parameters() const { return params_; }

  // Raw embedding rows e(x) (no scaling, no positions).
  Tensor embed(const Tensor& table, const PackedIds& ids) const;

  Tensor encode_embedded(const Tensor& emb, const SegmentLayout& layout,
                         const ForwardMode& mode) const;
  DecodeResult decode_embedded(const Tensor& z_emb, const SegmentLayout& z_layout,
                               const Tensor& memory, const SegmentLayout& mem_layout,
                               const ForwardMode& mode, bool want_attention) const;
  DecodeResult forward(const PackedIds& x, const PackedIds& z, const ForwardMode& mode,
                       bool want_attention) const;

  // Single-sentence, eval-mode entry points.
  Tensor encode(std::span<const TokenId> x) const;
  DecodeResult decode(std::span<const TokenId> z, const Tensor& h) const;
  Tensor translation_loss(std::span<const TokenId> x, std::span<const TokenId> z,
                          std::span<const TokenId> y) const;

  Tensor batch_loss(std::span<const SentencePair> batch, const ForwardMode& mode,
                    LossReduction reduction = LossReduction::kMeanOverPairs) const;

  // Eval-mode gradients wrt input embeddings; parameters are frozen, so no
  // parameter gradient is computed or accumulated.
  std::vector<InputGradients> input_embedding_grads(std::span<const SentencePair> batch,
                                                    bool want_probs = false) const;
  InputGradients input_embedding_grads(const SentencePair& pair, bool want_probs = false) const;

  // Argmax decoding until EOS or `max_steps` tokens; the EOS is not returned.
  std::vector<TokenSeq> greedy_decode(std::span<const TokenSeq> xs, int max_steps) const;
  TokenSeq greedy_decode(std::span<const TokenId> x, int max_steps) const;

 private:
  void check_ids(std::span<const TokenId> ids, int vocab, const char* side) const;
  static AttentionMap head_average(const std::vector<std::vector<Real>>& heads,
                                   std::int64_t src_len, std::int64_t trg_len);

  TransformerConfig cfg_;
  Tensor src_embed_;
  Tensor trg_embed_;
  std::vector<SelfAttentionBlock> encoder_;
  LayerNorm encoder_norm_;
  std::vector<DecoderBlock> decoder_;
  LayerNorm decoder_norm_;
  Linear output_;
  PositionalTable positions_;
  NamedTensors params_;
};

ADVSEQ_NAMESPACE_END
