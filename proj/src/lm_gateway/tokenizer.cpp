// Copyright 2026 The xqlparse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xql/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "xql/error.hpp"

namespace xql {
namespace {

bool is_word(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || u >= 0x80;
}

// Whitespace characters and punctuation are single pieces; word runs
// (including any non-ASCII bytes) stay together.
std::vector<std::string_view> pre_split(std::string_view text) {
  std::vector<std::string_view> pieces;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word(text[i])) {
      pieces.push_back(text.substr(i, 1));
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word(text[j])) ++j;
    pieces.push_back(text.substr(i, j - i));
    i = j;
  }
  return pieces;
}

constexpr const char* kCommonWords[] = {
    "the", "a", "an", "is", "of", "for", "to", "me", "show", "explain", "why",
    "what", "how", "instance", "data", "model", "please", "sure", "here", "answer",
    "parse", "operation", "xyz", "explainify", "unknown", "none", "Parse", "Question",
};

}  // namespace

Tokenizer::Tokenizer(std::vector<std::string> vocabulary)
    : vocabulary_(std::move(vocabulary)), trie_(vocabulary_) {
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    if (vocabulary_[i].empty()) throw std::invalid_argument("empty token in vocabulary");
    index_.emplace(vocabulary_[i], static_cast<TokenId>(i));
    longest_ = std::max(longest_, vocabulary_[i].size());
  }
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vocabulary " + path.string());
  auto j = nlohmann::json::parse(in);
  return Tokenizer(j.get<std::vector<std::string>>());
}

std::optional<TokenId> Tokenizer::find(std::string_view text) const {
  auto it = index_.find(text);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> Tokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (std::string_view piece : pre_split(text)) {
    if (auto id = find(piece)) {
      ids.push_back(*id);
      continue;
    }
    std::size_t i = 0;
    while (i < piece.size()) {
      std::optional<TokenId> match;
      std::size_t len = std::min(longest_, piece.size() - i);
      for (; len > 0; --len) {
        if ((match = find(piece.substr(i, len)))) break;
      }
      if (!match) {
        throw std::invalid_argument("tokenizer cannot encode \"" + std::string(piece) + "\"");
      }
      ids.push_back(*match);
      i += len;
    }
  }
  return ids;
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) out += token(id);
  return out;
}

Tokenizer make_mock_tokenizer(std::span<const OperationRegistry* const> registries) {
  std::vector<std::string> vocab{" ", "\n", "\t"};
  for (char c = 33; c < 127; ++c) vocab.emplace_back(1, c);
  std::set<std::string> seen(vocab.begin(), vocab.end());
  std::set<std::string> words{"and", "or"};
  for (const OperationRegistry* registry : registries) {
    for (const auto& op : registry->operations()) {
      words.insert(op.name);
      for (const auto& slot : op.slots) {
        words.insert(slot.name);
        words.insert(slot.allowed_values.begin(), slot.allowed_values.end());
      }
    }
  }
  words.insert(std::begin(kCommonWords), std::end(kCommonWords));
  for (const auto& w : words) {
    if (seen.insert(w).second) vocab.push_back(w);
  }
  return Tokenizer(std::move(vocab));
}

}  // namespace xql
