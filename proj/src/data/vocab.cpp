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

#include "data/vocab.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "common/error.h"

ADVSEQ_NAMESPACE_BEGIN

Tokens tokenize(std::string_view line) {
  Tokens out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Vocab::Vocab() {
  for (const char* t : {"<pad>", "<s>", "</s>", "<unk>"}) append(t);
}

void Vocab::append(std::string token) {
  index_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocab Vocab::build(std::span<const Tokens> corpus, int min_count) {
  std::map<std::string, long> counts;
  for (const auto& sentence : corpus) {
    for (const auto& t : sentence) ++counts[t];
  }
  if (counts.empty()) fail(ErrorCode::kData, "cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, long>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (auto& [tok, n] : kept) {
    if (!v.contains(tok)) v.append(tok);
  }
  return v;
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open vocabulary file " + path);
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) fail(ErrorCode::kData, "empty line in vocabulary file " + path);
    if (v.contains(line)) fail(ErrorCode::kData, "duplicate token '" + line + "' in " + path);
    v.append(line);
  }
  return v;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write vocabulary file " + path);
  for (std::size_t i = kNumReserved; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

TokenId Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || id >= size()) {
    fail(ErrorCode::kVocabulary, "token id " + std::to_string(id) + " outside vocabulary of " +
                                     std::to_string(size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

TokenSeq Vocab::encode(std::span<const std::string> tokens) const {
  TokenSeq out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

Tokens Vocab::decode(std::span<const TokenId> ids) const {
  Tokens out;
  for (auto id : ids) {
    if (!is_special(id)) out.push_back(token(id));
  }
  return out;
}

ADVSEQ_NAMESPACE_END
