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

#include "data/toy_task.h"

#include <algorithm>
#include <numeric>

#include "common/error.h"

ADVSEQ_NAMESPACE_BEGIN

ToyKind parse_toy_kind(const std::string& name) {
  if (name == "cipher") return ToyKind::kCipher;
  if (name == "reverse") return ToyKind::kReverse;
  if (name == "cipher+local-swap") return ToyKind::kCipherLocalSwap;
  fail(ErrorCode::kConfig, "unknown toy task kind '" + name + "'");
}

std::string toy_kind_name(ToyKind kind) {
  switch (kind) {
    case ToyKind::kCipher: return "cipher";
    case ToyKind::kReverse: return "reverse";
    case ToyKind::kCipherLocalSwap: return "cipher+local-swap";
  }
  return "cipher";
}

ToyTask ToyTask::create(ToyKind kind, int vocab_size, std::uint64_t seed, int branching) {
  if (vocab_size < 10) {
    fail(ErrorCode::kContract, "toy task vocab_size must be at least 10, got " +
                                   std::to_string(vocab_size));
  }
  if (branching < 1 || branching > vocab_size) {
    fail(ErrorCode::kContract, "toy task branching must lie in [1, vocab_size]");
  }
  ToyTask t;
  t.kind_ = kind;
  t.vocab_size_ = vocab_size;
  Rng rng(derive_seed(seed, "toy.structure"));
  t.cipher_.resize(static_cast<std::size_t>(vocab_size));
  std::iota(t.cipher_.begin(), t.cipher_.end(), 0);
  shuffle_range(t.cipher_.begin(), t.cipher_.end(), rng);
  t.trigger_.resize(static_cast<std::size_t>(vocab_size));
  for (int i = 0; i < vocab_size; ++i) t.trigger_[static_cast<std::size_t>(i)] = rng.below(2) == 1;
  std::vector<int> all(static_cast<std::size_t>(vocab_size));
  std::iota(all.begin(), all.end(), 0);
  for (int a = 0; a < vocab_size; ++a) {
    shuffle_range(all.begin(), all.end(), rng);
    std::vector<int> succ(all.begin(), all.begin() + branching);
    std::vector<double> w(static_cast<std::size_t>(branching));
    double total = 0.0;
    for (auto& x : w) {
      x = 0.5 + rng.uniform();
      total += x;
    }
    std::vector<double> cdf;
    double acc = 0.0;
    for (auto x : w) {
      acc += x / total;
      cdf.push_back(acc);
    }
    cdf.back() = 1.0;
    t.successors_.push_back(std::move(succ));
    t.successor_cdf_.push_back(std::move(cdf));
  }
  return t;
}

Tokens ToyTask::sample_source(std::int64_t length, Rng& rng) const {
  Tokens out;
  if (length <= 0) return out;
  int cur = static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab_size_)));
  out.push_back(source_word(cur));
  for (std::int64_t i = 1; i < length; ++i) {
    const auto& cdf = successor_cdf_[static_cast<std::size_t>(cur)];
    const double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
    cur = successors_[static_cast<std::size_t>(cur)][k];
    out.push_back(source_word(cur));
  }
  return out;
}

Tokens ToyTask::translate(const Tokens& source) const {
  std::vector<int> idx;
  for (const auto& w : source) {
    if (w.size() < 2 || w[0] != 's') fail(ErrorCode::kData, "not a toy source word: " + w);
    idx.push_back(std::stoi(w.substr(1)));
  }
  Tokens out;
  for (int i : idx) out.push_back(target_word(cipher(i)));
  if (kind_ == ToyKind::kReverse) {
    std::reverse(out.begin(), out.end());
  } else if (kind_ == ToyKind::kCipherLocalSwap) {
    for (std::size_t k = 0; k + 1 < out.size(); k += 2) {
      if (is_trigger(idx[k])) std::swap(out[k], out[k + 1]);
    }
  }
  return out;
}

ParallelText ToyTask::sample(std::int64_t count, std::int64_t min_len, std::int64_t max_len,
                             std::uint64_t sample_seed) const {
  if (min_len < 1 || max_len < min_len) {
    fail(ErrorCode::kContract, "toy task length range must satisfy 1 <= min <= max");
  }
  Rng rng(sample_seed);
  ParallelText text;
  for (std::int64_t n = 0; n < count; ++n) {
    const auto len = min_len + static_cast<std::int64_t>(
                                   rng.below(static_cast<std::uint64_t>(max_len - min_len + 1)));
    Tokens src = sample_source(len, rng);
    text.trg.push_back(translate(src));
    text.src.push_back(std::move(src));
  }
  return text;
}

ParallelText make_toy_task(const ToyTaskSpec& spec) {
  ToyTask task = ToyTask::create(spec.kind, spec.vocab_size, spec.seed, spec.branching);
  return task.sample(spec.corpus_size, spec.min_len, spec.max_len, derive_seed(spec.seed, "toy.train"));
}

ToySplits make_toy_splits(const ToyTaskSpec& spec, std::int64_t valid_size, std::int64_t test_size) {
  ToyTask task = ToyTask::create(spec.kind, spec.vocab_size, spec.seed, spec.branching);
  ToySplits out;
  out.train = task.sample(spec.corpus_size, spec.min_len, spec.max_len, derive_seed(spec.seed, "toy.train"));
  out.valid = task.sample(valid_size, spec.min_len, spec.max_len, derive_seed(spec.seed, "toy.valid"));
  out.test = task.sample(test_size, spec.min_len, spec.max_len, derive_seed(spec.seed, "toy.test"));
  return out;
}

ADVSEQ_NAMESPACE_END
