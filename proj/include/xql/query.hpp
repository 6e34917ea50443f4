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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xql/expected.hpp"
#include "xql/registry.hpp"

namespace xql {

struct Binding {
  std::string slot;
  SlotKind kind = SlotKind::kNone;
  std::string value;

  bool operator==(const Binding&) const = default;
};

/// One operation with its bound slots, kept in slot declaration order.
struct Clause {
  std::string operation;
  std::vector<Binding> bindings;

  const std::string* find(std::string_view slot) const;
  bool operator==(const Clause&) const = default;
};

enum class Connector { kAnd, kOr };

std::string_view to_string(Connector connector);

/// Flat, left-associative chain of clauses.
struct ParseTree {
  std::vector<Clause> clauses;
  std::vector<Connector> connectors;  // size == clauses.size() - 1

  bool operator==(const ParseTree&) const = default;
};

enum class ParseErrorKind {
  kEmptyInput,
  kUnknownOperation,
  kBadSlotValue,
  kMissingSlot,
  kDanglingConnector,
  kTrailingTokens,
};

std::string_view to_string(ParseErrorKind kind);

struct ParseError {
  ParseErrorKind kind = ParseErrorKind::kEmptyInput;
  std::string token;  // offending token, if any
  std::string slot;   // slot name for slot errors
  std::size_t position = 0;  // token index

  std::string message() const;
};

using ParseResult = Expected<ParseTree, ParseError>;

/// Strict parse of a label string. Whitespace between tokens is free; an
/// omitted optional slot is bound to its registry default.
ParseResult parse_label(std::string_view text, const OperationRegistry& registry);

/// Canonical form: single spaces, slots in declaration order, integer slots
/// as `<name> <value>`, enum/free slots as bare values.
std::string serialize(const ParseTree& tree);

/// Validating clause constructor; throws std::invalid_argument.
Clause make_clause(const OperationRegistry& registry, std::string_view operation,
                   const std::map<std::string, std::string>& values = {});

enum class CheckStatus { kValid, kRepaired, kRejected };

std::string_view to_string(CheckStatus status);

struct CheckResult {
  CheckStatus status = CheckStatus::kRejected;
  std::optional<ParseTree> tree;
  std::vector<std::string> diagnostics;
};

/// Template validation with the two permitted repairs: fill a missing
/// optional slot from its default, and drop tokens that trail a complete
/// parse. Anything else is rejected.
CheckResult template_check(std::string_view text, const OperationRegistry& registry);
CheckResult template_check(const ParseTree& tree, const OperationRegistry& registry);

/// Exact match of canonical forms. Throws CorruptDataError when `gold` does
/// not parse; an unparseable prediction simply compares false.
bool compare_parses(std::string_view predicted, std::string_view gold,
                    const OperationRegistry& registry);

/// Canonical form of `text`, or nullopt when it does not parse.
std::optional<std::string> canonicalize(std::string_view text,
                                        const OperationRegistry& registry);

/// The operation a parse is "about": the last non-filter clause, or the last
/// clause when every clause is a filter.
const std::string& main_intent(const ParseTree& tree,
                               const OperationRegistry& registry);

/// Splits on ASCII whitespace.
std::vector<std::string_view> split_tokens(std::string_view text);

}  // namespace xql
