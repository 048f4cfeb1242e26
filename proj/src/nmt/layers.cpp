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

#include "nmt/layers.h"

#include <cmath>

#include "common/error.h"

ADVSEQ_NAMESPACE_BEGIN

Tensor maybe_dropout(const Tensor& t, const ForwardMode& mode) {
  if (!mode.dropout_active()) return t;
  return dropout(t, mode.dropout, *mode.rng);
}

Linear Linear::create(ParamStore& store, const std::string& name, std::int64_t in,
                      std::int64_t out, Rng& rng) {
  Linear l;
  l.weight = store.add(name + ".weight", init_xavier(in, out, rng));
  l.bias = store.add(name + ".bias", Tensor::param({out}, std::vector<Real>(static_cast<std::size_t>(out))));
  return l;
}

Tensor Linear::operator()(const Tensor& x) const { return affine(x, weight, bias); }

LayerNorm LayerNorm::create(ParamStore& store, const std::string& name, std::int64_t dim) {
  LayerNorm n;
  n.gain = store.add(name + ".gain", Tensor::param({dim}, std::vector<Real>(static_cast<std::size_t>(dim), Real{1})));
  n.bias = store.add(name + ".bias", Tensor::param({dim}, std::vector<Real>(static_cast<std::size_t>(dim))));
  return n;
}

Tensor LayerNorm::operator()(const Tensor& x) const { return layer_norm(x, gain, bias); }

MultiHeadAttention MultiHeadAttention::create(ParamStore& store, const std::string& name,
                                              std::int64_t dim, int heads, Rng& rng) {
  MultiHeadAttention a;
  a.query = Linear::create(store, name + ".query", dim, dim, rng);
  a.key = Linear::create(store, name + ".key", dim, dim, rng);
  a.value = Linear::create(store, name + ".value", dim, dim, rng);
  a.output = Linear::create(store, name + ".output", dim, dim, rng);
  a.heads = heads;
  return a;
}

Tensor MultiHeadAttention::operator()(const Tensor& x_query, const Tensor& x_memory,
                                      const SegmentLayout& q_layout,
                                      const SegmentLayout& k_layout, bool causal,
                                      AttentionProbs* probs) const {
  Tensor q = query(x_query);
  Tensor k = key(x_memory);
  Tensor v = value(x_memory);
  return output(attention(q, k, v, q_layout, k_layout, heads, causal, probs));
}

FeedForward FeedForward::create(ParamStore& store, const std::string& name, std::int64_t dim,
                                std::int64_t hidden, Rng& rng) {
  FeedForward f;
  f.in = Linear::create(store, name + ".in", dim, hidden, rng);
  f.out = Linear::create(store, name + ".out", hidden, dim, rng);
  return f;
}

Tensor FeedForward::operator()(const Tensor& x) const { return out(relu(in(x))); }

SelfAttentionBlock SelfAttentionBlock::create(ParamStore& store, const std::string& name,
                                              std::int64_t dim, int heads, std::int64_t ff_dim,
                                              Rng& rng) {
  SelfAttentionBlock b;
  b.attn_norm = LayerNorm::create(store, name + ".attn_norm", dim);
  b.attn = MultiHeadAttention::create(store, name + ".attn", dim, heads, rng);
  b.ffn_norm = LayerNorm::create(store, name + ".ffn_norm", dim);
  b.ffn = FeedForward::create(store, name + ".ffn", dim, ff_dim, rng);
  return b;
}

Tensor SelfAttentionBlock::operator()(const Tensor& x, const SegmentLayout& layout, bool causal,
                                      const ForwardMode& mode) const {
  Tensor n = attn_norm(x);
  Tensor h = add(x, maybe_dropout(attn(n, n, layout, layout, causal), mode));
  return add(h, maybe_dropout(ffn(ffn_norm(h)), mode));
}

DecoderBlock DecoderBlock::create(ParamStore& store, const std::string& name, std::int64_t dim,
                                  int heads, std::int64_t ff_dim, Rng& rng) {
  DecoderBlock b;
  b.self_norm = LayerNorm::create(store, name + ".self_norm", dim);
  b.self_attn = MultiHeadAttention::create(store, name + ".self_attn", dim, heads, rng);
  b.cross_norm = LayerNorm::create(store, name + ".cross_norm", dim);
  b.cross_attn = MultiHeadAttention::create(store, name + ".cross_attn", dim, heads, rng);
  b.ffn_norm = LayerNorm::create(store, name + ".ffn_norm", dim);
  b.ffn = FeedForward::create(store, name + ".ffn", dim, ff_dim, rng);
  return b;
}

Tensor DecoderBlock::operator()(const Tensor& z, const Tensor& memory,
                                const SegmentLayout& z_layout, const SegmentLayout& mem_layout,
                                const ForwardMode& mode, AttentionProbs* cross_probs) const {
  Tensor n = self_norm(z);
  Tensor h = add(z, maybe_dropout(self_attn(n, n, z_layout, z_layout, true), mode));
  Tensor c = cross_norm(h);
  h = add(h, maybe_dropout(cross_attn(c, memory, z_layout, mem_layout, false, cross_probs), mode));
  return add(h, maybe_dropout(ffn(ffn_norm(h)), mode));
}

PositionalTable::PositionalTable(std::int64_t max_len, std::int64_t dim)
    : max_len_(max_len), dim_(dim), table_(static_cast<std::size_t>(max_len * dim)) {
  for (std::int64_t p = 0; p < max_len; ++p) {
    for (std::int64_t i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(p) * rate;
      table_[static_cast<std::size_t>(p * dim + i)] =
          static_cast<Real>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
}

Tensor PositionalTable::for_layout(const SegmentLayout& layout) const {
  std::int64_t rows = 0;
  for (const auto& s : layout) rows = std::max(rows, s.offset + s.length);
  Buffer out(static_cast<std::size_t>(rows * dim_));
  for (const auto& s : layout) {
    if (s.length > max_len_) {
      fail(ErrorCode::kLength, "sequence of length " + std::to_string(s.length) +
                                   " exceeds max_len " + std::to_string(max_len_));
    }
    for (std::int64_t p = 0; p < s.length; ++p) {
      std::copy_n(table_.data() + p * dim_, dim_, out.data() + (s.offset + p) * dim_);
    }
  }
  return Tensor::from({rows, dim_}, std::move(out));
}

ADVSEQ_NAMESPACE_END
