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

#include "data/sentence.h"

ADVSEQ_NAMESPACE_BEGIN

SentencePair SentencePair::from_content(std::span<const TokenId> src,
                                        std::span<const TokenId> trg) {
  SentencePair p;
  p.x.assign(src.begin(), src.end());
  p.x.push_back(kEosId);
  p.y.assign(trg.begin(), trg.end());
  p.y.push_back(kEosId);
  p.z = shift_right(p.y);
  return p;
}

TokenSeq SentencePair::shift_right(std::span<const TokenId> y) {
  TokenSeq z;
  z.reserve(y.size());
  if (y.empty()) return z;
  z.push_back(kBosId);
  z.insert(z.end(), y.begin(), y.end() - 1);
  return z;
}

bool z_shift_holds(const SentencePair& pair) {
  if (pair.z.size() != pair.y.size() || pair.z.empty()) return false;
  if (pair.z[0] != kBosId) return false;
  for (std::size_t j = 0; j + 1 < pair.y.size(); ++j) {
    if (pair.z[j + 1] != pair.y[j]) return false;
  }
  return true;
}

TokenSeq content_of(std::span<const TokenId> seq) {
  TokenSeq out;
  for (auto t : seq) {
    if (!is_special(t)) out.push_back(t);
  }
  return out;
}

PackedIds PackedIds::pack(std::span<const TokenSeq> seqs) {
  PackedIds p;
  std::int64_t offset = 0;
  for (const auto& s : seqs) {
    p.ids.insert(p.ids.end(), s.begin(), s.end());
    p.layout.push_back({offset, static_cast<std::int64_t>(s.size())});
    offset += static_cast<std::int64_t>(s.size());
  }
  return p;
}

ADVSEQ_NAMESPACE_END
