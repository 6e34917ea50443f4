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

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xql/grammar.hpp"

namespace xql {

using TokenId = std::int32_t;

namespace detail {
struct MaskSearch;
}

/// Incremental Earley recognizer over characters. Tokens are split on single
/// spaces; the state is a value and copies share the completed chart sets.
class PrefixRecognizer {
 public:
  explicit PrefixRecognizer(std::shared_ptr<const Grammar> grammar);

  const Grammar& grammar() const { return *grammar_; }
  const std::shared_ptr<const Grammar>& grammar_ptr() const { return grammar_; }

  /// Appends `piece`. Returns false (and stays rejecting) once the consumed
  /// text is no longer a viable prefix of some sentence.
  bool advance(std::string_view piece);
  PrefixRecognizer advanced(std::string_view piece) const;

  bool rejected() const { return rejected_; }
  bool viable() const { return !rejected_; }
  /// The consumed text is itself a sentence of the grammar.
  bool accepting() const;
  const std::string& consumed() const { return consumed_; }

 private:
  friend struct detail::MaskSearch;

  struct Item {
    std::int32_t production;
    std::int32_t dot;
    std::int32_t origin;
  };
  struct ItemSet {
    std::vector<Item> items;
    std::vector<int> expected;  // terminal ids after a dot
    bool accepts = false;
  };

  std::shared_ptr<const ItemSet> close(std::vector<Item> seeds) const;
  std::vector<Item> scan(std::string_view token) const;
  bool advance_char(char c);

  using SetPtr = std::shared_ptr<const ItemSet>;
  std::size_t chart_size() const { return frozen_->size() + tail_.size(); }
  const ItemSet& set_at(std::size_t i) const {
    return i < frozen_->size() ? *(*frozen_)[i] : *tail_[i - frozen_->size()];
  }
  const ItemSet& last_set() const { return set_at(chart_size() - 1); }
  void push_set(SetPtr set);

  std::shared_ptr<const Grammar> grammar_;
  // Chart sets: a shared immutable prefix plus a short private tail.
  std::shared_ptr<const std::vector<SetPtr>> frozen_;
  std::vector<SetPtr> tail_;
  std::string partial_;
  std::vector<int> live_;  // expected terminals that still admit partial_
  std::string consumed_;
  bool rejected_ = false;
};

/// The set of vocabulary tokens that keep the output a viable prefix.
struct TokenMask {
  std::vector<TokenId> allowed;  // ascending
  bool eos_allowed = false;

  bool allows(TokenId id) const;
  bool empty() const { return allowed.empty() && !eos_allowed; }
  bool operator==(const TokenMask&) const = default;
};

/// Character trie over vocabulary strings, built once per vocabulary.
class VocabularyTrie {
 public:
  explicit VocabularyTrie(std::span<const std::string> vocabulary);

  std::size_t size() const { return vocabulary_size_; }

 private:
  friend TokenMask allowed_continuations(const PrefixRecognizer&, const VocabularyTrie&);
  friend struct detail::MaskSearch;

  struct Node {
    std::vector<std::pair<char, std::int32_t>> children;
    std::vector<TokenId> tokens;  // tokens ending here
  };
  std::vector<Node> nodes_;
  std::size_t vocabulary_size_ = 0;
};

TokenMask allowed_continuations(const PrefixRecognizer& state, const VocabularyTrie& trie);

}  // namespace xql
