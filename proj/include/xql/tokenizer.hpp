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

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xql/recognizer.hpp"
#include "xql/registry.hpp"

namespace xql {

/// Fixed vocabulary with greedy encoding. Text is pre-split into whitespace
/// runs, punctuation characters, and word runs; each piece maps to a single
/// token when the vocabulary has it, otherwise to its longest-prefix
/// decomposition.
class Tokenizer {
 public:
  explicit Tokenizer(std::vector<std::string> vocabulary);

  /// Loads a JSON array of token strings (index == token id).
  static Tokenizer load(const std::filesystem::path& path);

  std::span<const std::string> vocabulary() const { return vocabulary_; }
  std::size_t size() const { return vocabulary_.size(); }
  const std::string& token(TokenId id) const { return vocabulary_.at(id); }
  std::optional<TokenId> find(std::string_view text) const;
  const VocabularyTrie& trie() const { return trie_; }

  /// Throws std::invalid_argument when a character is not covered.
  std::vector<TokenId> encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> vocabulary_;
  std::map<std::string, TokenId, std::less<>> index_;
  std::size_t longest_ = 0;
  VocabularyTrie trie_;
};

/// The bundled mock tokenizer: every registry terminal is one token, plus
/// whitespace, printable ASCII characters, and a few common words.
Tokenizer make_mock_tokenizer(std::span<const OperationRegistry* const> registries);

}  // namespace xql
