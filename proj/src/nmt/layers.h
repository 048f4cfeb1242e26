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

#include <string>
#include <vector>

#include "common/config.h"
#include "common/rng.h"
#include "grad/ops.h"
#include "grad/params.h"

ADVSEQ_NAMESPACE_BEGIN

// Forward-pass mode. Dropout is active only when `train` is set and a
// generator is supplied.
struct ForwardMode {
  bool train = false;
  Real dropout = 0;
  Rng* rng = nullptr;

  static ForwardMode eval() { return {}; }
  static ForwardMode training(Real rate, Rng& rng) { return {true, rate, &rng}; }
  bool dropout_active() const { return train && dropout > 0 && rng != nullptr; }
};

Tensor maybe_dropout(const Tensor& t, const ForwardMode& mode);

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  static Linear create(ParamStore& store, const std::string& name, std::int64_t in,
                       std::int64_t out, Rng& rng);
  Tensor operator()(const Tensor& x) const;
};

struct LayerNorm {
  Tensor gain;
  Tensor bias;

  static LayerNorm create(ParamStore& store, const std::string& name, std::int64_t dim);
  Tensor operator()(const Tensor& x) const;
};

struct MultiHeadAttention {
  Linear query, key, value, output;
  int heads = 1;

  static MultiHeadAttention create(ParamStore& store, const std::string& name,
                                   std::int64_t dim, int heads, Rng& rng);
  Tensor operator()(const Tensor& x_query, const Tensor& x_memory,
                    const SegmentLayout& q_layout, const SegmentLayout& k_layout,
                    bool causal, AttentionProbs* probs = nullptr) const;
};

struct FeedForward {
  Linear in, out;

  static FeedForward create(ParamStore& store, const std::string& name, std::int64_t dim,
                            std::int64_t hidden, Rng& rng);
  Tensor operator()(const Tensor& x) const;
};

// Pre-norm self-attention block: x + Attn(LN(x)), then x + FFN(LN(x)).
struct SelfAttentionBlock {
  LayerNorm attn_norm, ffn_norm;
  MultiHeadAttention attn;
  FeedForward ffn;

  static SelfAttentionBlock create(ParamStore& store, const std::string& name,
                                   std::int64_t dim, int heads, std::int64_t ff_dim, Rng& rng);
  Tensor operator()(const Tensor& x, const SegmentLayout& layout, bool causal,
                    const ForwardMode& mode) const;
};

// Pre-norm decoder block with causal self-attention and cross-attention.
struct DecoderBlock {
  LayerNorm self_norm, cross_norm, ffn_norm;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ffn;

  static DecoderBlock create(ParamStore& store, const std::string& name, std::int64_t dim,
                             int heads, std::int64_t ff_dim, Rng& rng);
  Tensor operator()(const Tensor& z, const Tensor& memory, const SegmentLayout& z_layout,
                    const SegmentLayout& mem_layout, const ForwardMode& mode,
                    AttentionProbs* cross_probs) const;
};

// Fixed sinusoidal encodings for `max_len` positions.
class PositionalTable {
 public:
  PositionalTable(std::int64_t max_len, std::int64_t dim);
  // Constant [rows, dim] tensor with the encoding of each row's position
  // inside its segment.
  Tensor for_layout(const SegmentLayout& layout) const;
  std::int64_t max_len() const { return max_len_; }

 private:
  std::int64_t max_len_;
  std::int64_t dim_;
  std::vector<Real> table_;
};

ADVSEQ_NAMESPACE_END
