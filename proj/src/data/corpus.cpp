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

#include "data/corpus.h"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "common/error.h"

ADVSEQ_NAMESPACE_BEGIN

std::vector<Tokens> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::vector<Tokens> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(tokenize(line));
  }
  return lines;
}

void write_lines(const std::string& path, std::span<const Tokens> lines) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  for (const auto& l : lines) out << join_tokens(l) << '\n';
}

ParallelText load_parallel_text(const std::string& src_path, const std::string& trg_path) {
  ParallelText t;
  t.src = read_lines(src_path);
  t.trg = read_lines(trg_path);
  if (t.src.size() != t.trg.size()) {
    fail(ErrorCode::kData, "line count mismatch: " + src_path + " has " +
                               std::to_string(t.src.size()) + " lines, " + trg_path + " has " +
                               std::to_string(t.trg.size()));
  }
  return t;
}

std::vector<SentencePair> encode_parallel(const ParallelText& text, const Vocab& src_vocab,
                                          const Vocab& trg_vocab) {
  std::vector<SentencePair> pairs;
  pairs.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    pairs.push_back(SentencePair::from_content(src_vocab.encode(text.src[i]),
                                               trg_vocab.encode(text.trg[i])));
  }
  return pairs;
}

std::vector<SentencePair> load_parallel(const std::string& src_path, const std::string& trg_path,
                                        const Vocab& src_vocab, const Vocab& trg_vocab) {
  return encode_parallel(load_parallel_text(src_path, trg_path), src_vocab, trg_vocab);
}

std::vector<SentencePair> Batch::pairs() const {
  std::vector<SentencePair> out(static_cast<std::size_t>(size));
  for (std::int64_t b = 0; b < size; ++b) {
    auto& p = out[static_cast<std::size_t>(b)];
    const auto xl = x_len[static_cast<std::size_t>(b)];
    const auto yl = y_len[static_cast<std::size_t>(b)];
    p.x.assign(x.begin() + b * x_width, x.begin() + b * x_width + xl);
    p.y.assign(y.begin() + b * y_width, y.begin() + b * y_width + yl);
    p.z.assign(z.begin() + b * y_width, z.begin() + b * y_width + yl);
  }
  return out;
}

Batch make_batch(std::span<const SentencePair> pairs, std::span<const std::size_t> indices) {
  Batch b;
  b.size = static_cast<std::int64_t>(indices.size());
  for (auto i : indices) {
    b.x_width = std::max<std::int64_t>(b.x_width, static_cast<std::int64_t>(pairs[i].x.size()));
    b.y_width = std::max<std::int64_t>(b.y_width, static_cast<std::int64_t>(pairs[i].y.size()));
  }
  const auto xn = static_cast<std::size_t>(b.size * b.x_width);
  const auto yn = static_cast<std::size_t>(b.size * b.y_width);
  b.x.assign(xn, kPadId);
  b.z.assign(yn, kPadId);
  b.y.assign(yn, kPadId);
  b.x_pad.assign(xn, 1);
  b.y_pad.assign(yn, 1);
  for (std::int64_t r = 0; r < b.size; ++r) {
    const auto& p = pairs[indices[static_cast<std::size_t>(r)]];
    for (std::size_t j = 0; j < p.x.size(); ++j) {
      b.x[static_cast<std::size_t>(r * b.x_width) + j] = p.x[j];
      b.x_pad[static_cast<std::size_t>(r * b.x_width) + j] = 0;
    }
    for (std::size_t j = 0; j < p.y.size(); ++j) {
      b.y[static_cast<std::size_t>(r * b.y_width) + j] = p.y[j];
      b.z[static_cast<std::size_t>(r * b.y_width) + j] = p.z[j];
      b.y_pad[static_cast<std::size_t>(r * b.y_width) + j] = 0;
    }
    b.x_len.push_back(static_cast<std::int64_t>(p.x.size()));
    b.y_len.push_back(static_cast<std::int64_t>(p.y.size()));
  }
  b.indices.assign(indices.begin(), indices.end());
  return b;
}

std::vector<Batch> epoch_batches(std::span<const SentencePair> pairs, std::int64_t token_budget,
                                 std::uint64_t shuffle_seed) {
  Rng rng(shuffle_seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_range(order.begin(), order.end(), rng);
  auto width = [&](std::size_t i) {
    return static_cast<std::int64_t>(std::max(pairs[i].x.size(), pairs[i].y.size()));
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return width(a) < width(b); });

  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> current;
  std::int64_t current_width = 0;
  for (auto i : order) {
    const std::int64_t w = std::max(current_width, width(i));
    if (!current.empty() && w * static_cast<std::int64_t>(current.size() + 1) > token_budget) {
      groups.push_back(std::move(current));
      current.clear();
      current_width = 0;
    }
    current.push_back(i);
    current_width = std::max(current_width, width(i));
  }
  if (!current.empty()) groups.push_back(std::move(current));
  shuffle_range(groups.begin(), groups.end(), rng);

  std::vector<Batch> batches;
  batches.reserve(groups.size());
  for (const auto& g : groups) batches.push_back(make_batch(pairs, g));
  return batches;
}

BatchStream::BatchStream(std::span<const SentencePair> pairs, std::int64_t token_budget,
                         std::uint64_t seed)
    : pairs_(pairs), budget_(token_budget), seed_(seed) {
  if (pairs.empty()) fail(ErrorCode::kData, "cannot batch an empty corpus");
}

const Batch& BatchStream::next() {
  if (cursor_ >= current_.size()) {
    ++epoch_;
    current_ = epoch_batches(pairs_, budget_, derive_seed(seed_, static_cast<std::uint64_t>(epoch_)));
    cursor_ = 0;
  }
  return current_[cursor_++];
}

ADVSEQ_NAMESPACE_END
