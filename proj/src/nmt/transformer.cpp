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

#include "nmt/transformer.h"

#include <algorithm>
#include <cmath>

#include "common/error.h"

ADVSEQ_NAMESPACE_BEGIN

void TransformerConfig::validate() const {
  if (num_layers < 1 || model_dim < 1 || num_heads < 1 || ff_dim < 1) {
    fail(ErrorCode::kConfig, "transformer sizes must be positive");
  }
  if (model_dim % num_heads != 0) {
    fail(ErrorCode::kConfig, "model_dim " + std::to_string(model_dim) +
                                 " is not divisible by num_heads " + std::to_string(num_heads));
  }
  if (src_vocab_size <= kNumReserved || trg_vocab_size <= kNumReserved) {
    fail(ErrorCode::kConfig, "vocabulary sizes must exceed the reserved ids");
  }
  if (max_len < 2) fail(ErrorCode::kConfig, "max_len must be at least 2");
  if (dropout < 0.0 || dropout >= 1.0) fail(ErrorCode::kConfig, "dropout must lie in [0, 1)");
  if (attention_layer >= num_layers || attention_layer < -num_layers) {
    fail(ErrorCode::kConfig, "attention_layer out of range");
  }
}

Transformer::Transformer(TransformerConfig cfg, ParamStore& store, Rng& rng,
                         const std::string& prefix)
    : cfg_(cfg), positions_(cfg.max_len, cfg.model_dim) {
  cfg_.validate();
  const std::int64_t d = cfg_.model_dim;
  const Real emb_std = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(d)));
  const std::size_t first = store.entries().size();
  src_embed_ = store.add(prefix + ".src_embed", init_normal({cfg_.src_vocab_size, d}, emb_std, rng));
  trg_embed_ = store.add(prefix + ".trg_embed", init_normal({cfg_.trg_vocab_size, d}, emb_std, rng));
  for (int l = 0; l < cfg_.num_layers; ++l) {
    encoder_.push_back(SelfAttentionBlock::create(store, prefix + ".enc" + std::to_string(l), d,
                                                  cfg_.num_heads, cfg_.ff_dim, rng));
  }
  encoder_norm_ = LayerNorm::create(store, prefix + ".enc_norm", d);
  for (int l = 0; l < cfg_.num_layers; ++l) {
    decoder_.push_back(DecoderBlock::create(store, prefix + ".dec" + std::to_string(l), d,
                                            cfg_.num_heads, cfg_.ff_dim, rng));
  }
  decoder_norm_ = LayerNorm::create(store, prefix + ".dec_norm", d);
  output_ = Linear::create(store, prefix + ".output", d, cfg_.trg_vocab_size, rng);
  params_.assign(store.entries().begin() + static_cast<std::ptrdiff_t>(first), store.entries().end());
}

void Transformer::check_ids(std::span<const TokenId> ids, int vocab, const char* side) const {
  for (auto id : ids) {
    if (id < 0 || id >= vocab) {
      fail(ErrorCode::kVocabulary, std::string(side) + " token id " + std::to_string(id) +
                                       " outside vocabulary of " + std::to_string(vocab));
    }
  }
}

Tensor Transformer::embed(const Tensor& table, const PackedIds& ids) const {
  return gather_rows(table, std::span<const TokenId>(ids.ids));
}

Tensor Transformer::encode_embedded(const Tensor& emb, const SegmentLayout& layout,
                                    const ForwardMode& mode) const {
  const Real s = static_cast<Real>(std::sqrt(static_cast<double>(cfg_.model_dim)));
  Tensor h = maybe_dropout(add(scale(emb, s), positions_.for_layout(layout)), mode);
  for (const auto& block : encoder_) h = block(h, layout, false, mode);
  return encoder_norm_(h);
}

DecodeResult Transformer::decode_embedded(const Tensor& z_emb, const SegmentLayout& z_layout,
                                          const Tensor& memory, const SegmentLayout& mem_layout,
                                          const ForwardMode& mode, bool want_attention) const {
  const Real s = static_cast<Real>(std::sqrt(static_cast<double>(cfg_.model_dim)));
  Tensor h = maybe_dropout(add(scale(z_emb, s), positions_.for_layout(z_layout)), mode);
  const int n = static_cast<int>(decoder_.size());
  const int attn_layer = cfg_.attention_layer < 0 ? n + cfg_.attention_layer : cfg_.attention_layer;
  AttentionProbs probs;
  for (int l = 0; l < n; ++l) {
    AttentionProbs* p = want_attention && l == attn_layer ? &probs : nullptr;
    h = decoder_[static_cast<std::size_t>(l)](h, memory, z_layout, mem_layout, mode, p);
  }
  DecodeResult out;
  out.logits = output_(decoder_norm_(h));
  if (want_attention) {
    for (std::size_t seg = 0; seg < z_layout.size(); ++seg) {
      out.attention.push_back(
          head_average(probs.probs[seg], mem_layout[seg].length, z_layout[seg].length));
    }
  }
  return out;
}

AttentionMap Transformer::head_average(const std::vector<std::vector<Real>>& heads,
                                       std::int64_t src_len, std::int64_t trg_len) {
  AttentionMap map;
  map.src_len = src_len;
  map.trg_len = trg_len;
  map.weights.assign(static_cast<std::size_t>(src_len * trg_len), Real{0});
  if (heads.empty()) return map;
  const Real inv = Real(1) / static_cast<Real>(heads.size());
  // Probabilities are stored [trg, src]; the map is [src, trg].
  for (const auto& p : heads) {
    for (std::int64_t j = 0; j < trg_len; ++j) {
      for (std::int64_t i = 0; i < src_len; ++i) {
        map.weights[static_cast<std::size_t>(i * trg_len + j)] +=
            p[static_cast<std::size_t>(j * src_len + i)] * inv;
      }
    }
  }
  return map;
}

DecodeResult Transformer::forward(const PackedIds& x, const PackedIds& z, const ForwardMode& mode,
                                  bool want_attention) const {
  check_ids(x.ids, cfg_.src_vocab_size, "source");
  check_ids(z.ids, cfg_.trg_vocab_size, "target");
  Tensor memory = encode_embedded(embed(src_embed_, x), x.layout, mode);
  return decode_embedded(embed(trg_embed_, z), z.layout, memory, x.layout, mode, want_attention);
}

Tensor Transformer::encode(std::span<const TokenId> x) const {
  if (static_cast<int>(x.size()) > cfg_.max_len) {
    fail(ErrorCode::kLength, "source length " + std::to_string(x.size()) + " exceeds max_len " +
                                 std::to_string(cfg_.max_len));
  }
  check_ids(x, cfg_.src_vocab_size, "source");
  TokenSeq seq(x.begin(), x.end());
  PackedIds packed = PackedIds::pack(std::span<const TokenSeq>(&seq, 1));
  return encode_embedded(embed(src_embed_, packed), packed.layout, ForwardMode::eval());
}

DecodeResult Transformer::decode(std::span<const TokenId> z, const Tensor& h) const {
  if (z.empty() || z[0] != kBosId) fail(ErrorCode::kContract, "decoder input must start with BOS");
  if (static_cast<int>(z.size()) > cfg_.max_len) {
    fail(ErrorCode::kLength, "decoder input length " + std::to_string(z.size()) +
                                 " exceeds max_len " + std::to_string(cfg_.max_len));
  }
  check_ids(z, cfg_.trg_vocab_size, "target");
  TokenSeq seq(z.begin(), z.end());
  PackedIds packed = PackedIds::pack(std::span<const TokenSeq>(&seq, 1));
  SegmentLayout mem_layout{{0, h.dim(0)}};
  return decode_embedded(embed(trg_embed_, packed), packed.layout, h, mem_layout,
                         ForwardMode::eval(), true);
}

namespace {

void check_pair(const SentencePair& p) {
  if (p.z.size() != p.y.size()) {
    fail(ErrorCode::kContract, "decoder input length " + std::to_string(p.z.size()) +
                                   " differs from target length " + std::to_string(p.y.size()));
  }
  if (p.z.empty() || p.z[0] != kBosId) {
    fail(ErrorCode::kContract, "decoder input must start with BOS");
  }
  if (p.x.empty()) fail(ErrorCode::kDegenerateInput, "empty source sentence");
}

// Per-row weights so that the weighted NLL is the (mean or sum) over pairs of
// each pair's token-mean NLL.
std::vector<Real> pair_weights(std::span<const SentencePair> batch, LossReduction reduction) {
  std::vector<Real> w;
  const double pair_scale =
      reduction == LossReduction::kMeanOverPairs ? 1.0 / static_cast<double>(batch.size()) : 1.0;
  for (const auto& p : batch) {
    std::int64_t active = 0;
    for (auto t : p.y) active += t != kPadId;
    if (active == 0) fail(ErrorCode::kDegenerateInput, "target with no non-pad tokens");
    const Real wi = static_cast<Real>(pair_scale / static_cast<double>(active));
    for (auto t : p.y) w.push_back(t == kPadId ? Real{0} : wi);
  }
  return w;
}

struct PackedBatch {
  PackedIds x, z;
  std::vector<TokenId> y;
};

PackedBatch pack_batch(std::span<const SentencePair> batch) {
  std::vector<TokenSeq> xs, zs;
  PackedBatch pb;
  for (const auto& p : batch) {
    check_pair(p);
    xs.push_back(p.x);
    zs.push_back(p.z);
    pb.y.insert(pb.y.end(), p.y.begin(), p.y.end());
  }
  pb.x = PackedIds::pack(xs);
  pb.z = PackedIds::pack(zs);
  return pb;
}

}  // namespace

Tensor Transformer::translation_loss(std::span<const TokenId> x, std::span<const TokenId> z,
                                     std::span<const TokenId> y) const {
  SentencePair p{TokenSeq(x.begin(), x.end()), TokenSeq(y.begin(), y.end()),
                 TokenSeq(z.begin(), z.end())};
  return batch_loss(std::span<const SentencePair>(&p, 1), ForwardMode::eval());
}

Tensor Transformer::batch_loss(std::span<const SentencePair> batch, const ForwardMode& mode,
                               LossReduction reduction) const {
  if (batch.empty()) fail(ErrorCode::kDegenerateInput, "empty batch");
  PackedBatch pb = pack_batch(batch);
  check_ids(pb.y, cfg_.trg_vocab_size, "target");
  DecodeResult out = forward(pb.x, pb.z, mode, false);
  std::vector<Real> w = pair_weights(batch, reduction);
  return cross_entropy(out.logits, pb.y, kPadId, w);
}

std::vector<InputGradients> Transformer::input_embedding_grads(std::span<const SentencePair> batch,
                                                               bool want_probs) const {
  if (batch.empty()) return {};
  PackedBatch pb = pack_batch(batch);
  check_ids(pb.x.ids, cfg_.src_vocab_size, "source");
  check_ids(pb.z.ids, cfg_.trg_vocab_size, "target");
  check_ids(pb.y, cfg_.trg_vocab_size, "target");

  Tape tape;
  TapeScope scope(tape);
  FreezeParams frozen;
  // Detached copies of the embedding rows become the leaves we differentiate
  // against, one per input position.
  Tensor ex = embed(src_embed_, pb.x).detach();
  Tensor ez = embed(trg_embed_, pb.z).detach();
  ex.impl()->requires_grad = true;
  ez.impl()->requires_grad = true;
  Tensor memory = encode_embedded(ex, pb.x.layout, ForwardMode::eval());
  DecodeResult out = decode_embedded(ez, pb.z.layout, memory, pb.x.layout, ForwardMode::eval(), true);
  // Summing per-pair losses keeps each pair's gradient equal to the gradient
  // of its own loss.
  std::vector<Real> w = pair_weights(batch, LossReduction::kSumOverPairs);
  Tensor loss = cross_entropy(out.logits, pb.y, kPadId, w);

  // Per-pair loss values from the logits.
  std::vector<InputGradients> result(batch.size());
  const std::int64_t v = cfg_.trg_vocab_size;
  auto logits = out.logits.data();
  std::size_t row = 0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    double acc = 0.0;
    auto& r = result[s];
    if (want_probs) r.next_token_probs.resize(batch[s].z.size() * static_cast<std::size_t>(v));
    for (std::size_t j = 0; j < batch[s].y.size(); ++j, ++row) {
      const Real* lr = logits.data() + static_cast<std::int64_t>(row) * v;
      Real mx = *std::max_element(lr, lr + v);
      double z = 0.0;
      for (std::int64_t c = 0; c < v; ++c) z += std::exp(lr[c] - mx);
      const double lse = mx + std::log(z);
      if (want_probs) {
        for (std::int64_t c = 0; c < v; ++c) {
          r.next_token_probs[j * static_cast<std::size_t>(v) + static_cast<std::size_t>(c)] =
              static_cast<Real>(std::exp(lr[c] - lse));
        }
      }
      if (batch[s].y[j] != kPadId) acc += w[row] * (lse - lr[batch[s].y[j]]);
    }
    r.loss = static_cast<Real>(acc);
    r.attention = std::move(out.attention[s]);
  }

  backward(loss);
  const std::int64_t d = cfg_.model_dim;
  auto gx = ex.grad();
  auto gz = ez.grad();
  for (std::size_t s = 0; s < batch.size(); ++s) {
    auto& r = result[s];
    r.dim = d;
    const auto& xs = pb.x.layout[s];
    const auto& zs = pb.z.layout[s];
    r.source.assign(gx.begin() + xs.offset * d, gx.begin() + (xs.offset + xs.length) * d);
    r.target.assign(gz.begin() + zs.offset * d, gz.begin() + (zs.offset + zs.length) * d);
  }
  return result;
}

InputGradients Transformer::input_embedding_grads(const SentencePair& pair, bool want_probs) const {
  return std::move(input_embedding_grads(std::span<const SentencePair>(&pair, 1), want_probs)[0]);
}

std::vector<TokenSeq> Transformer::greedy_decode(std::span<const TokenSeq> xs, int max_steps) const {
  std::vector<TokenSeq> outputs(xs.size());
  if (xs.empty()) return outputs;
  NoGradScope no_grad;
  for (const auto& x : xs) check_ids(x, cfg_.src_vocab_size, "source");
  PackedIds px = PackedIds::pack(xs);
  Tensor memory = encode_embedded(embed(src_embed_, px), px.layout, ForwardMode::eval());
  const int steps = std::min(max_steps, cfg_.max_len);
  std::vector<TokenSeq> prefixes(xs.size(), TokenSeq{kBosId});
  std::vector<std::size_t> active(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) active[i] = i;
  const std::int64_t v = cfg_.trg_vocab_size;
  for (int step = 0; step < steps && !active.empty(); ++step) {
    std::vector<TokenSeq> zs;
    SegmentLayout mem_layout;
    std::vector<std::int64_t> mem_rows;
    for (auto i : active) {
      zs.push_back(prefixes[i]);
      const auto& seg = px.layout[i];
      mem_layout.push_back({static_cast<std::int64_t>(mem_rows.size()), seg.length});
      for (std::int64_t r = 0; r < seg.length; ++r) mem_rows.push_back(seg.offset + r);
    }
    Tensor mem = active.size() == xs.size() ? memory
                                            : gather_rows(memory, std::span<const std::int64_t>(mem_rows));
    PackedIds pz = PackedIds::pack(zs);
    DecodeResult out = decode_embedded(embed(trg_embed_, pz), pz.layout, mem, mem_layout,
                                       ForwardMode::eval(), false);
    auto logits = out.logits.data();
    std::vector<std::size_t> still;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto& seg = pz.layout[a];
      const Real* lr = logits.data() + (seg.offset + seg.length - 1) * v;
      TokenId best = -1;
      for (TokenId c = 0; c < v; ++c) {
        if (c == kPadId || c == kBosId) continue;
        if (best < 0 || lr[c] > lr[best]) best = c;
      }
      const auto i = active[a];
      if (best == kEosId) continue;
      outputs[i].push_back(best);
      prefixes[i].push_back(best);
      still.push_back(i);
    }
    active = std::move(still);
  }
  return outputs;
}

TokenSeq Transformer::greedy_decode(std::span<const TokenId> x, int max_steps) const {
  TokenSeq seq(x.begin(), x.end());
  return std::move(greedy_decode(std::span<const TokenSeq>(&seq, 1), max_steps)[0]);
}

ADVSEQ_NAMESPACE_END
