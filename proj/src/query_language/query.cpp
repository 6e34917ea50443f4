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

#include "xql/query.hpp"

#include <stdexcept>

#include "xql/error.hpp"

namespace xql {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

ParseError make_error(ParseErrorKind kind, std::size_t position,
                      std::string token = {}, std::string slot = {}) {
  return ParseError{kind, std::move(token), std::move(slot), position};
}

// Single-pass recursive-descent over a token list. `filled` collects
// "op.slot" for every default the parser had to supply.
class LabelParser {
 public:
  LabelParser(const OperationRegistry& registry,
              std::vector<std::string_view> tokens)
      : registry_(registry), tokens_(std::move(tokens)) {}

  std::size_t size() const { return tokens_.size(); }
  std::size_t position() const { return pos_; }
  bool at_end() const { return pos_ >= tokens_.size(); }
  std::string_view peek() const { return at_end() ? std::string_view{} : tokens_[pos_]; }
  void advance() { ++pos_; }
  void seek(std::size_t pos) { pos_ = pos; }
  const std::vector<std::string>& filled() const { return filled_; }

  std::optional<ParseError> clause(Clause& out) {
    if (at_end()) return make_error(ParseErrorKind::kDanglingConnector, pos_);
    const std::string_view head = peek();
    if (is_connector(head)) {
      return make_error(ParseErrorKind::kDanglingConnector, pos_, std::string(head));
    }
    const OperationSpec* op = registry_.find(head);
    if (op == nullptr || op->is_logic()) {
      return make_error(ParseErrorKind::kUnknownOperation, pos_, std::string(head));
    }
    out.operation = op->name;
    out.bindings.clear();
    advance();
    for (const SlotSpec& slot : op->slots) {
      if (auto err = bind_slot(*op, slot, out)) return err;
    }
    return std::nullopt;
  }

 private:
  std::optional<ParseError> bind_slot(const OperationSpec& op, const SlotSpec& slot,
                                      Clause& out) {
    const std::string_view tok = peek();
    switch (slot.kind) {
      case SlotKind::kInteger:
        if (!at_end() && tok == slot.name) {
          advance();
          if (at_end()) {
            return make_error(ParseErrorKind::kMissingSlot, pos_, {}, slot.name);
          }
          const std::string_view value = peek();
          if (!is_canonical_integer(value)) {
            return make_error(ParseErrorKind::kBadSlotValue, pos_,
                              std::string(value), slot.name);
          }
          out.bindings.push_back({slot.name, slot.kind, std::string(value)});
          advance();
          return std::nullopt;
        }
        break;
      case SlotKind::kEnumToken:
        if (!at_end() && slot.allows(tok)) {
          out.bindings.push_back({slot.name, slot.kind, std::string(tok)});
          advance();
          return std::nullopt;
        }
        break;
      case SlotKind::kFreeToken:
        // Optional free tokens never swallow an operation name; required
        // ones take whatever free token is there.
        if (!at_end() && is_free_token(tok) &&
            (slot.required || !registry_.contains(tok))) {
          out.bindings.push_back({slot.name, slot.kind, std::string(tok)});
          advance();
          return std::nullopt;
        }
        break;
      case SlotKind::kNone:
        if (!at_end() && tok == slot.name) {
          out.bindings.push_back({slot.name, slot.kind, slot.name});
          advance();
          return std::nullopt;
        }
        break;
    }
    if (slot.default_value) {
      out.bindings.push_back({slot.name, slot.kind, *slot.default_value});
      filled_.push_back(op.name + "." + slot.name);
      return std::nullopt;
    }
    if (!slot.required) return std::nullopt;
    if (!at_end() && !is_connector(tok)) {
      return make_error(ParseErrorKind::kBadSlotValue, pos_, std::string(tok), slot.name);
    }
    return make_error(ParseErrorKind::kMissingSlot, pos_, {}, slot.name);
  }

  const OperationRegistry& registry_;
  std::vector<std::string_view> tokens_;
  std::size_t pos_ = 0;
  std::vector<std::string> filled_;
};

struct ChainOutcome {
  ParseTree tree;
  std::vector<ParseError> errors;
  std::vector<std::string> filled;
  std::size_t dropped_from = 0;  // index of first truncated token
  std::size_t dropped = 0;
};

// `lenient` truncates trailing tokens instead of failing; `collect_all`
// keeps going after a bad clause so every violation gets reported.
ChainOutcome parse_chain(std::string_view text, const OperationRegistry& registry,
                         bool lenient, bool collect_all) {
  ChainOutcome outcome;
  LabelParser parser(registry, split_tokens(text));
  if (parser.size() == 0) {
    outcome.errors.push_back(make_error(ParseErrorKind::kEmptyInput, 0));
    return outcome;
  }
  while (true) {
    Clause clause;
    if (auto err = parser.clause(clause)) {
      outcome.errors.push_back(*err);
      if (!collect_all) break;
      // Resynchronise on the next connector.
      while (!parser.at_end() && !is_connector(parser.peek())) parser.advance();
    } else {
      outcome.tree.clauses.push_back(std::move(clause));
    }
    if (parser.at_end()) break;
    const std::string_view next = parser.peek();
    if (is_connector(next) && registry.contains(next)) {
      const std::size_t at = parser.position();
      parser.advance();
      if (parser.at_end()) {
        outcome.errors.push_back(
            make_error(ParseErrorKind::kDanglingConnector, at, std::string(next)));
        break;
      }
      outcome.tree.connectors.push_back(next == "and" ? Connector::kAnd : Connector::kOr);
      continue;
    }
    if (lenient && outcome.errors.empty()) {
      outcome.dropped_from = parser.position();
      outcome.dropped = parser.size() - parser.position();
      break;
    }
    outcome.errors.push_back(
        make_error(ParseErrorKind::kTrailingTokens, parser.position(), std::string(next)));
    break;
  }
  outcome.filled = parser.filled();
  return outcome;
}

}  // namespace

const std::string* Clause::find(std::string_view slot) const {
  for (const auto& b : bindings) {
    if (b.slot == slot) return &b.value;
  }
  return nullptr;
}

std::string_view to_string(Connector connector) {
  return connector == Connector::kAnd ? "and" : "or";
}

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kEmptyInput: return "EmptyInput";
    case ParseErrorKind::kUnknownOperation: return "UnknownOperation";
    case ParseErrorKind::kBadSlotValue: return "BadSlotValue";
    case ParseErrorKind::kMissingSlot: return "MissingSlot";
    case ParseErrorKind::kDanglingConnector: return "DanglingConnector";
    case ParseErrorKind::kTrailingTokens: return "TrailingTokens";
  }
  return "Unknown";
}

std::string_view to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::kValid: return "valid";
    case CheckStatus::kRepaired: return "repaired";
    case CheckStatus::kRejected: return "rejected";
  }
  return "unknown";
}

std::string ParseError::message() const {
  std::string out(to_string(kind));
  out += "(";
  if (!slot.empty()) {
    out += slot;
    out += ", \"" + token + "\"";
  } else if (!token.empty()) {
    out += "\"" + token + "\"";
  }
  out += ") at token " + std::to_string(position);
  return out;
}

std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) tokens.push_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

ParseResult parse_label(std::string_view text, const OperationRegistry& registry) {
  ChainOutcome outcome = parse_chain(text, registry, /*lenient=*/false,
                                     /*collect_all=*/false);
  if (!outcome.errors.empty()) return Unexpected{outcome.errors.front()};
  return std::move(outcome.tree);
}

std::string serialize(const ParseTree& tree) {
  std::string out;
  for (std::size_t i = 0; i < tree.clauses.size(); ++i) {
    if (i > 0) {
      out += ' ';
      out += to_string(tree.connectors[i - 1]);
      out += ' ';
    }
    const Clause& clause = tree.clauses[i];
    out += clause.operation;
    for (const Binding& b : clause.bindings) {
      out += ' ';
      if (b.kind == SlotKind::kInteger) {
        out += b.slot;
        out += ' ';
      }
      out += b.value;
    }
  }
  return out;
}

Clause make_clause(const OperationRegistry& registry, std::string_view operation,
                   const std::map<std::string, std::string>& values) {
  const OperationSpec* op = registry.find(operation);
  if (op == nullptr || op->is_logic()) {
    throw std::invalid_argument("unknown operation: " + std::string(operation));
  }
  for (const auto& [slot, value] : values) {
    if (op->find_slot(slot) == nullptr) {
      throw std::invalid_argument(op->name + " has no slot " + slot);
    }
  }
  Clause clause{op->name, {}};
  for (const SlotSpec& slot : op->slots) {
    auto it = values.find(slot.name);
    if (it != values.end()) {
      if (!slot.allows(it->second)) {
        throw std::invalid_argument("bad value for " + op->name + "." + slot.name +
                                    ": " + it->second);
      }
      clause.bindings.push_back({slot.name, slot.kind, it->second});
    } else if (slot.default_value) {
      clause.bindings.push_back({slot.name, slot.kind, *slot.default_value});
    } else if (slot.required) {
      throw std::invalid_argument("missing required slot " + op->name + "." + slot.name);
    }
  }
  return clause;
}

CheckResult template_check(std::string_view text, const OperationRegistry& registry) {
  ChainOutcome outcome = parse_chain(text, registry, /*lenient=*/true,
                                     /*collect_all=*/true);
  CheckResult result;
  if (!outcome.errors.empty()) {
    result.status = CheckStatus::kRejected;
    for (const auto& err : outcome.errors) result.diagnostics.push_back(err.message());
    return result;
  }
  for (const auto& slot : outcome.filled) {
    result.diagnostics.push_back("filled default for " + slot);
  }
  if (outcome.dropped > 0) {
    const auto tokens = split_tokens(text);
    std::string dropped;
    for (std::size_t i = outcome.dropped_from; i < tokens.size(); ++i) {
      if (!dropped.empty()) dropped += ' ';
      dropped += tokens[i];
    }
    result.diagnostics.push_back("dropped trailing tokens \"" + dropped + "\"");
  }
  result.status = (outcome.filled.empty() && outcome.dropped == 0)
                      ? CheckStatus::kValid
                      : CheckStatus::kRepaired;
  result.tree = std::move(outcome.tree);
  return result;
}

CheckResult template_check(const ParseTree& tree, const OperationRegistry& registry) {
  CheckResult result;
  if (tree.clauses.empty()) {
    result.diagnostics.push_back("EmptyInput");
    return result;
  }
  if (tree.connectors.size() + 1 != tree.clauses.size()) {
    result.diagnostics.push_back("DanglingConnector");
    return result;
  }
  ParseTree repaired{{}, tree.connectors};
  for (const Clause& clause : tree.clauses) {
    const OperationSpec* op = registry.find(clause.operation);
    if (op == nullptr || op->is_logic()) {
      result.diagnostics.push_back("UnknownOperation(\"" + clause.operation + "\")");
      continue;
    }
    Clause fixed{op->name, {}};
    std::size_t used = 0;
    for (const SlotSpec& slot : op->slots) {
      const Binding* bound = nullptr;
      for (const auto& b : clause.bindings) {
        if (b.slot == slot.name) bound = &b;
      }
      if (bound != nullptr) {
        ++used;
        if (bound->kind != slot.kind || !slot.allows(bound->value)) {
          result.diagnostics.push_back("BadSlotValue(" + slot.name + ", \"" +
                                       bound->value + "\")");
          continue;
        }
        fixed.bindings.push_back({slot.name, slot.kind, bound->value});
      } else if (slot.default_value) {
        fixed.bindings.push_back({slot.name, slot.kind, *slot.default_value});
      } else if (slot.required) {
        result.diagnostics.push_back("MissingSlot(" + op->name + "." + slot.name + ")");
      }
    }
    if (used != clause.bindings.size()) {
      result.diagnostics.push_back("UnknownSlot in clause " + clause.operation);
    }
    repaired.clauses.push_back(std::move(fixed));
  }
  if (!result.diagnostics.empty()) {
    result.status = CheckStatus::kRejected;
    return result;
  }
  if (repaired == tree) {
    result.status = CheckStatus::kValid;
  } else {
    result.status = CheckStatus::kRepaired;
    result.diagnostics.push_back("filled defaults / reordered slots");
  }
  result.tree = std::move(repaired);
  return result;
}

std::optional<std::string> canonicalize(std::string_view text,
                                        const OperationRegistry& registry) {
  auto parsed = parse_label(text, registry);
  if (!parsed) return std::nullopt;
  return serialize(*parsed);
}

bool compare_parses(std::string_view predicted, std::string_view gold,
                    const OperationRegistry& registry) {
  auto gold_tree = parse_label(gold, registry);
  if (!gold_tree) {
    throw CorruptDataError("gold label \"" + std::string(gold) +
                           "\" does not parse: " + gold_tree.error().message());
  }
  auto predicted_tree = parse_label(predicted, registry);
  if (!predicted_tree) return false;
  return serialize(*predicted_tree) == serialize(*gold_tree);
}

const std::string& main_intent(const ParseTree& tree, const OperationRegistry& registry) {
  if (tree.clauses.empty()) throw std::invalid_argument("empty parse tree");
  for (auto it = tree.clauses.rbegin(); it != tree.clauses.rend(); ++it) {
    const OperationSpec* op = registry.find(it->operation);
    if (op != nullptr && !op->is_filter()) return it->operation;
  }
  return tree.clauses.back().operation;
}

}  // namespace xql
