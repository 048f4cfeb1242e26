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

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "common/config.h"
#include "data/sentence.h"

ADVSEQ_NAMESPACE_BEGIN

using Tokens = std::vector<std::string>;

// Whitespace tokenization.
Tokens tokenize(std::string_view line);
std::string join_tokens(std::span<const std::string> tokens);

// Token <-> id map. Ids 0-3 are reserved for <pad>, <s>, </s>, <unk>; the
// remaining entries are ordered by descending corpus frequency, ties by
// token text.
class Vocab {
 public:
  Vocab();

  // Keeps tokens occurring at least `min_count` times.
  static Vocab build(std::span<const Tokens> corpus, int min_count = 1);
  // One token per line; line k holds id k + 4.
  static Vocab load(const std::string& path);
  void save(const std::string& path) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  TokenId id(std::string_view token) const;  // <unk> when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;

  TokenSeq encode(std::span<const std::string> tokens) const;
  // Drops structural specials; <unk> is rendered as text.
  Tokens decode(std::span<const TokenId> ids) const;

 private:
  void append(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

ADVSEQ_NAMESPACE_END
