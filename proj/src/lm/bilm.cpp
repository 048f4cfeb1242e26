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

#include "lm/bilm.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.h"

ADVSEQ_NAMESPACE_BEGIN

void BiLmConfig::validate() const {
  if (num_layers < 1 || model_dim < 1 || num_heads < 1 || ff_dim < 1 || vocab_size < 1) {
    fail(ErrorCode::kConfig, "language model sizes must be positive");
  }
  if (model_dim % num_heads != 0) {
    fail(ErrorCode::kConfig, "LM model_dim is not divisible by num_heads");
  }
  if (dropout < 0.0 || dropout >= 1.0) fail(ErrorCode::kConfig, "LM dropout must lie in [0, 1)");
}

BiLm::BiLm(BiLmConfig cfg, ParamStore& store, Rng& rng, const std::string& prefix,
           Tensor shared_embedding)
    : cfg_(cfg), positions_(cfg.max_len, cfg.model_dim) {
  cfg_.validate();
  const std::int64_t d = cfg_.model_dim;
  const std::size_t first = store.entries().size();
  if (shared_embedding.defined()) {
    if (shared_embedding.rank() != 2 || shared_embedding.dim(0) != cfg_.vocab_size ||
        shared_embedding.dim(1) != d) {
      fail(ErrorCode::kDimension, "shared embedding " + shape_str(shared_embedding.shape()) +
                                      " does not fit LM vocab " + std::to_string(cfg_.vocab_size) +
                                      " x dim " + std::to_string(d));
    }
    embed_ = shared_embedding;
  } else {
    embed_ = store.add(prefix + ".embed",
                       init_normal({cfg_.vocab_size, d}, static_cast<Real>(1.0 / std::sqrt(double(d))), rng));
  }
  boundary_ = store.add(prefix + ".boundary",
                        init_normal({2, d}, static_cast<Real>(1.0 / std::sqrt(double(d))), rng));
  for (int l = 0; l < cfg_.num_layers; ++l) {
    forward_stack_.push_back(SelfAttentionBlock::create(store, prefix + ".fwd" + std::to_string(l), d,
                                                        cfg_.num_heads, cfg_.ff_dim, rng));
  }
  forward_norm_ = LayerNorm::create(store, prefix + ".fwd_norm", d);
  for (int l = 0; l < cfg_.num_layers; ++l) {
    backward_stack_.push_back(SelfAttentionBlock::create(store, prefix + ".bwd" + std::to_string(l), d,
                                                         cfg_.num_heads, cfg_.ff_dim, rng));
  }
  backward_norm_ = LayerNorm::create(store, prefix + ".bwd_norm", d);
  combine_ = Linear::create(store, prefix + ".combine", 2 * d, d, rng);
  output_ = Linear::create(store, prefix + ".output", d, cfg_.vocab_size, rng);
  own_params_.assign(store.entries().begin() + static_cast<std::ptrdiff_t>(first), store.entries().end());
  if (shared_embedding.defined()) {
    for (const auto& e : store.entries()) {
      if (e.second.impl() == embed_.impl()) params_.push_back(e);
    }
    if (params_.empty()) params_.emplace_back(prefix + ".embed", embed_);
  }
  params_.insert(params_.end(), own_params_.begin(), own_params_.end());
}

void BiLm::check_sentence(std::span<const TokenId> s) const {
  if (static_cast<int>(s.size()) > cfg_.max_len) {
    fail(ErrorCode::kLength, "LM sentence length " + std::to_string(s.size()) +
                                 " exceeds max_len " + std::to_string(cfg_.max_len));
  }
  for (auto t : s) {
    if (t < 0 || t >= cfg_.vocab_size) {
      fail(ErrorCode::kVocabulary, "LM token id " + std::to_string(t) + " outside vocabulary of " +
                                       std::to_string(cfg_.vocab_size));
    }
  }
}

Tensor BiLm::run_stack(const std::vector<SelfAttentionBlock>& stack, const LayerNorm& norm,
                       const Tensor& table, const PackedIds& ids, const ForwardMode& mode) const {
  const Real s = static_cast<Real>(std::sqrt(static_cast<double>(cfg_.model_dim)));
  Tensor h = gather_rows(table, std::span<const TokenId>(ids.ids));
  h = maybe_dropout(add(scale(h, s), positions_.for_layout(ids.layout)), mode);
  for (const auto& block : stack) h = block(h, ids.layout, true, mode);
  return norm(h);
}

Tensor BiLm::position_logits(std::span<const TokenSeq> sentences, const ForwardMode& mode) const {
  const TokenId bos_row = cfg_.vocab_size;
  const TokenId eos_row = cfg_.vocab_size + 1;
  PackedIds fwd, bwd;
  std::vector<std::int64_t> align;  // backward row feeding each packed position
  std::int64_t offset = 0;
  for (const auto& s : sentences) {
    check_sentence(s);
    const auto n = static_cast<std::int64_t>(s.size());
    fwd.layout.push_back({offset, n});
    bwd.layout.push_back({offset, n});
    if (n > 0) {
      fwd.ids.push_back(bos_row);
      for (std::int64_t i = 0; i + 1 < n; ++i) fwd.ids.push_back(s[static_cast<std::size_t>(i)]);
      bwd.ids.push_back(eos_row);
      for (std::int64_t i = n - 1; i >= 1; --i) bwd.ids.push_back(s[static_cast<std::size_t>(i)]);
      for (std::int64_t i = 0; i < n; ++i) align.push_back(offset + (n - 1 - i));
    }
    offset += n;
  }
  if (offset == 0) fail(ErrorCode::kDegenerateInput, "LM batch has no tokens");
  // Embedding rows followed by the two boundary rows.
  Tensor table = concat({embed_, boundary_}, 0);
  Tensor f = run_stack(forward_stack_, forward_norm_, table, fwd, mode);
  Tensor b = run_stack(backward_stack_, backward_norm_, table, bwd, mode);
  Tensor b_aligned = gather_rows(b, std::span<const std::int64_t>(align));
  Tensor h = combine_(concat({f, b_aligned}, 1));
  return output_(maybe_dropout(h, mode));
}

std::vector<std::vector<std::vector<Real>>> BiLm::position_distributions(
    std::span<const TokenSeq> sentences) const {
  NoGradScope no_grad;
  std::vector<std::vector<std::vector<Real>>> out(sentences.size());
  std::vector<TokenSeq> nonempty;
  for (const auto& s : sentences) {
    if (!s.empty()) nonempty.push_back(s);
  }
  if (nonempty.empty()) return out;
  Tensor probs = softmax(position_logits(nonempty, ForwardMode::eval()), -1);
  const std::int64_t v = cfg_.vocab_size;
  auto pd = probs.data();
  std::size_t row = 0;
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    for (std::size_t i = 0; i < sentences[k].size(); ++i, ++row) {
      out[k].emplace_back(pd.begin() + static_cast<std::int64_t>(row) * v,
                          pd.begin() + static_cast<std::int64_t>(row + 1) * v);
    }
  }
  return out;
}

std::vector<std::vector<Real>> BiLm::position_distributions(std::span<const TokenId> s) const {
  TokenSeq seq(s.begin(), s.end());
  return std::move(position_distributions(std::span<const TokenSeq>(&seq, 1))[0]);
}

std::vector<Real> BiLm::position_distribution(std::span<const TokenId> s, std::int64_t i) const {
  if (i < 0 || i >= static_cast<std::int64_t>(s.size())) {
    fail(ErrorCode::kContract, "LM position " + std::to_string(i) + " outside sentence of length " +
                                   std::to_string(s.size()));
  }
  return std::move(position_distributions(s)[static_cast<std::size_t>(i)]);
}

Tensor BiLm::lm_loss(std::span<const TokenSeq> batch, const ForwardMode& mode) const {
  if (batch.empty()) fail(ErrorCode::kDegenerateInput, "empty LM batch");
  std::vector<TokenSeq> nonempty;
  for (const auto& s : batch) {
    if (!s.empty()) nonempty.push_back(s);
  }
  if (nonempty.empty()) fail(ErrorCode::kDegenerateInput, "LM batch has no tokens");
  std::vector<TokenId> targets;
  std::vector<Real> weights;
  const double per_sentence = 1.0 / static_cast<double>(nonempty.size());
  for (const auto& s : nonempty) {
    const Real w = static_cast<Real>(per_sentence / static_cast<double>(s.size()));
    for (auto t : s) {
      targets.push_back(t);
      weights.push_back(w);
    }
  }
  // No real token equals -1, so nothing is treated as padding here.
  return cross_entropy(position_logits(nonempty, mode), targets, -1, weights);
}

std::vector<double> BiLm::sentence_scores(std::span<const TokenSeq> batch) const {
  NoGradScope no_grad;
  std::vector<double> scores(batch.size(), 0.0);
  std::vector<TokenSeq> nonempty;
  for (const auto& s : batch) {
    if (s.empty()) fail(ErrorCode::kContract, "sentence_score of an empty sentence");
    nonempty.push_back(s);
  }
  if (nonempty.empty()) return scores;
  Tensor lp = log_softmax(position_logits(nonempty, ForwardMode::eval()), -1);
  const std::int64_t v = cfg_.vocab_size;
  auto d = lp.data();
  std::size_t row = 0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    double acc = 0.0;
    for (auto t : batch[k]) {
      acc += d[row * static_cast<std::size_t>(v) + static_cast<std::size_t>(t)];
      ++row;
    }
    scores[k] = acc / static_cast<double>(batch[k].size());
  }
  return scores;
}

double BiLm::sentence_score(std::span<const TokenId> s) const {
  TokenSeq seq(s.begin(), s.end());
  return sentence_scores(std::span<const TokenSeq>(&seq, 1))[0];
}

std::vector<double> pretrain(BiLm& lm, std::span<const TokenSeq> corpus, const LmPretrainConfig& cfg) {
  std::vector<TokenSeq> usable;
  for (const auto& s : corpus) {
    if (!s.empty()) usable.push_back(s);
  }
  if (usable.empty()) fail(ErrorCode::kData, "LM pretraining corpus is empty");
  std::vector<double> trace;
  if (cfg.steps <= 0) return trace;
  Adam opt(cfg.adam, lm.parameters());
  Rng order_rng(derive_seed(cfg.seed, "lm.order"));
  Rng dropout_rng(derive_seed(cfg.seed, "lm.dropout"));
  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const auto bs = static_cast<std::size_t>(std::max<std::int64_t>(1, cfg.batch_sentences));
  const ForwardMode mode = ForwardMode::training(static_cast<Real>(lm.config().dropout), dropout_rng);
  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    std::vector<TokenSeq> batch;
    while (batch.size() < std::min(bs, usable.size())) {
      if (cursor == order.size()) {
        shuffle_range(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      batch.push_back(usable[order[cursor++]]);
    }
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = lm.lm_loss(batch, mode);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      fail(ErrorCode::kDiverged, "LM pretraining loss diverged at step " + std::to_string(step));
    }
    backward(loss);
    opt.step();
    trace.push_back(value);
  }
  return trace;
}

ADVSEQ_NAMESPACE_END
