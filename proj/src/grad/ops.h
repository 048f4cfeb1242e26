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
#include <vector>

#include "common/config.h"
#include "common/rng.h"
#include "grad/tensor.h"

ADVSEQ_NAMESPACE_BEGIN

// Contiguous run of rows belonging to one sequence inside a packed
// [total_rows, dim] activation matrix.
struct Segment {
  std::int64_t offset = 0;
  std::int64_t length = 0;
};
using SegmentLayout = std::vector<Segment>;

SegmentLayout make_layout(std::span<const std::int64_t> lengths);

// Standard 2-D matrix product.
Tensor matmul(const Tensor& a, const Tensor& b);
// x [m, k] times w [k, n] plus a bias row b [n], in one node.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

// Elementwise sum. `b` may equal `a` in shape or match its trailing
// dimensions, in which case it is broadcast over the leading batch rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, Real factor);
Tensor relu(const Tensor& t);
Tensor reshape(const Tensor& t, Shape shape);
Tensor sum(const Tensor& t);
Tensor mean(const Tensor& t);

Tensor softmax(const Tensor& t, int axis = -1);
Tensor log_softmax(const Tensor& t, int axis = -1);

// Normalizes over the last axis, then applies gain and bias (both [dim]).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  Real eps = Real(1e-5));

Tensor concat(const std::vector<Tensor>& parts, int axis);

// Row lookup into a 2-D table; gradients scatter-add back into the table.
Tensor gather_rows(const Tensor& table, std::span<const TokenId> ids);
Tensor gather_rows(const Tensor& table, std::span<const std::int64_t> rows);

// Token negative log-likelihood over rows of [rows, vocab] logits. Rows whose
// target equals `pad_id` are ignored. With empty `row_weights` the result is
// the mean over the remaining rows; otherwise it is the weighted sum.
Tensor cross_entropy(const Tensor& logits, std::span<const TokenId> targets,
                     TokenId pad_id, std::span<const Real> row_weights = {});

// Inverted dropout. Identity when rate == 0.
Tensor dropout(const Tensor& t, Real rate, Rng& rng);

// Per-segment attention probabilities: probs[segment][head] is a row-major
// [query_len, key_len] matrix.
struct AttentionProbs {
  std::vector<std::vector<std::vector<Real>>> probs;
};

// Multi-head scaled dot-product attention over packed sequences. Query
// segment s attends only to key segment s. Queries/keys/values are already
// projected ([rows, dim], dim divisible by heads). With `causal`, query i of
// a segment sees keys 0..i of the same segment.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 const SegmentLayout& q_layout, const SegmentLayout& k_layout,
                 int heads, bool causal, AttentionProbs* probs_out = nullptr);

ADVSEQ_NAMESPACE_END
