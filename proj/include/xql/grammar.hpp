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

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xql/registry.hpp"

namespace xql {

/// Lexical classes a grammar terminal can stand for. Sentences are
/// terminals joined by single spaces.
struct Terminal {
  enum class Kind { kLiteral, kInteger, kFreeToken };

  Kind kind = Kind::kLiteral;
  std::string text;  // literal text; empty for lexical classes

  bool matches(std::string_view token) const;
  /// True when `partial` can still be extended to a match.
  bool viable_prefix(std::string_view partial) const;
  std::string display() const;

  bool operator==(const Terminal&) const = default;
};

struct Symbol {
  bool terminal = false;
  int id = 0;

  bool operator==(const Symbol&) const = default;
};

struct Production {
  int lhs = 0;
  std::vector<Symbol> rhs;  // empty == explicitly nullable alternative
};

class Grammar {
 public:
  class Builder {
   public:
    int nonterminal(std::string_view name);
    int literal(std::string_view text);
    int integer();
    int free_token();
    Builder& add(int lhs, std::vector<Symbol> rhs);
    /// Validates, prunes rules unreachable from `start`, and precomputes
    /// nullability. Throws std::logic_error on an undefined non-terminal.
    Grammar build(int start) const;

    static Symbol t(int id) { return {true, id}; }
    static Symbol n(int id) { return {false, id}; }

   private:
    friend class Grammar;
    int terminal(Terminal terminal);

    std::vector<std::string> nonterminals_;
    std::vector<Terminal> terminals_;
    std::vector<Production> productions_;
  };

  int start() const { return start_; }
  std::span<const Production> productions() const { return productions_; }
  std::span<const Terminal> terminals() const { return terminals_; }
  std::size_t nonterminal_count() const { return nonterminals_.size(); }
  const std::string& nonterminal_name(int id) const { return nonterminals_[id]; }
  std::optional<int> find_nonterminal(std::string_view name) const;
  std::span<const int> productions_for(int nonterminal) const {
    return by_lhs_[nonterminal];
  }
  bool nullable(int nonterminal) const { return nullable_[nonterminal]; }

  /// Builder seeded with this grammar's rules, for deriving sub-grammars.
  Builder to_builder() const;

  /// EBNF-like listing, one rule per line.
  std::string dump() const;

 private:
  int start_ = 0;
  std::vector<std::string> nonterminals_;
  std::vector<Terminal> terminals_;
  std::vector<Production> productions_;
  std::vector<std::vector<int>> by_lhs_;
  std::vector<bool> nullable_;
};

/// Non-terminal names used by the compiled label grammar.
inline constexpr std::string_view kQueryRule = "query";
inline constexpr std::string_view kClauseRule = "clause";
inline constexpr std::string_view kFilterClauseRule = "filter_clause";
std::string operation_rule(std::string_view operation);

/// Grammar whose language is exactly the canonical label strings.
Grammar build_full_grammar(const OperationRegistry& registry);

/// Bare operation names, no slots or connectors. An empty `only` keeps every
/// main intent (no filters or logic operators); otherwise the language is
/// restricted to those names.
Grammar derive_intent_only_grammar(const OperationRegistry& registry,
                                   std::span<const std::string> only = {});

/// Canonical clauses of one operation, optionally preceded by filter clauses
/// joined with `and`. Throws std::invalid_argument for an unknown operation.
Grammar derive_intent_grammar(const Grammar& grammar, std::string_view operation);

/// Bounded enumeration of L(grammar): sentences of at most `max_tokens`
/// tokens, with lexical classes instantiated from the given samples.
std::vector<std::string> enumerate_sentences(const Grammar& grammar,
                                             std::size_t max_tokens,
                                             std::span<const std::string> integer_samples,
                                             std::span<const std::string> free_samples);

}  // namespace xql
