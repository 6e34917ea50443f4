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

#include "xql/grammar.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

namespace xql {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || is_digit(c) || c == '_';
}

}  // namespace

bool Terminal::matches(std::string_view token) const {
  switch (kind) {
    case Kind::kLiteral:
      return token == text;
    case Kind::kInteger:
      return is_canonical_integer(token);
    case Kind::kFreeToken:
      return is_free_token(token);
  }
  return false;
}

bool Terminal::viable_prefix(std::string_view partial) const {
  switch (kind) {
    case Kind::kLiteral:
      return text.starts_with(partial);
    case Kind::kInteger:
      if (partial.size() > 9) return false;
      if (partial.size() > 1 && partial.front() == '0') return false;
      return std::all_of(partial.begin(), partial.end(), is_digit);
    case Kind::kFreeToken:
      // "and" is not a free token, but "andes" is.
      return std::all_of(partial.begin(), partial.end(), is_word_char);
  }
  return false;
}

std::string Terminal::display() const {
  switch (kind) {
    case Kind::kLiteral:
      return "\"" + text + "\"";
    case Kind::kInteger:
      return "<int>";
    case Kind::kFreeToken:
      return "<token>";
  }
  return "?";
}

std::string operation_rule(std::string_view operation) {
  return "op:" + std::string(operation);
}

int Grammar::Builder::nonterminal(std::string_view name) {
  auto it = std::find(nonterminals_.begin(), nonterminals_.end(), name);
  if (it != nonterminals_.end()) return static_cast<int>(it - nonterminals_.begin());
  nonterminals_.emplace_back(name);
  return static_cast<int>(nonterminals_.size() - 1);
}

int Grammar::Builder::terminal(Terminal terminal) {
  auto it = std::find(terminals_.begin(), terminals_.end(), terminal);
  if (it != terminals_.end()) return static_cast<int>(it - terminals_.begin());
  terminals_.push_back(std::move(terminal));
  return static_cast<int>(terminals_.size() - 1);
}

int Grammar::Builder::literal(std::string_view text) {
  return terminal({Terminal::Kind::kLiteral, std::string(text)});
}
int Grammar::Builder::integer() { return terminal({Terminal::Kind::kInteger, {}}); }
int Grammar::Builder::free_token() { return terminal({Terminal::Kind::kFreeToken, {}}); }

Grammar::Builder& Grammar::Builder::add(int lhs, std::vector<Symbol> rhs) {
  productions_.push_back({lhs, std::move(rhs)});
  return *this;
}

Grammar Grammar::Builder::build(int start) const {
  const int nt_count = static_cast<int>(nonterminals_.size());
  if (start < 0 || start >= nt_count) throw std::logic_error("bad start symbol");

  std::vector<std::vector<int>> by_lhs(nt_count);
  for (std::size_t i = 0; i < productions_.size(); ++i) {
    by_lhs[productions_[i].lhs].push_back(static_cast<int>(i));
  }

  // Reachability from the start symbol.
  std::vector<bool> reachable_nt(nt_count, false);
  std::vector<bool> reachable_t(terminals_.size(), false);
  std::vector<int> stack{start};
  reachable_nt[start] = true;
  while (!stack.empty()) {
    const int nt = stack.back();
    stack.pop_back();
    if (by_lhs[nt].empty()) {
      throw std::logic_error("non-terminal '" + nonterminals_[nt] + "' has no rule");
    }
    for (int p : by_lhs[nt]) {
      for (const Symbol& s : productions_[p].rhs) {
        if (s.terminal) {
          reachable_t[s.id] = true;
        } else if (!reachable_nt[s.id]) {
          reachable_nt[s.id] = true;
          stack.push_back(s.id);
        }
      }
    }
  }

  Grammar g;
  std::vector<int> nt_map(nt_count, -1);
  std::vector<int> t_map(terminals_.size(), -1);
  for (int i = 0; i < nt_count; ++i) {
    if (reachable_nt[i]) {
      nt_map[i] = static_cast<int>(g.nonterminals_.size());
      g.nonterminals_.push_back(nonterminals_[i]);
    }
  }
  for (std::size_t i = 0; i < terminals_.size(); ++i) {
    if (reachable_t[i]) {
      t_map[i] = static_cast<int>(g.terminals_.size());
      g.terminals_.push_back(terminals_[i]);
    }
  }
  for (const Production& p : productions_) {
    if (!reachable_nt[p.lhs]) continue;
    Production q{nt_map[p.lhs], {}};
    for (const Symbol& s : p.rhs) {
      q.rhs.push_back({s.terminal, s.terminal ? t_map[s.id] : nt_map[s.id]});
    }
    g.productions_.push_back(std::move(q));
  }
  g.start_ = nt_map[start];
  g.by_lhs_.assign(g.nonterminals_.size(), {});
  for (std::size_t i = 0; i < g.productions_.size(); ++i) {
    g.by_lhs_[g.productions_[i].lhs].push_back(static_cast<int>(i));
  }

  g.nullable_.assign(g.nonterminals_.size(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (const Production& p : g.productions_) {
      if (g.nullable_[p.lhs]) continue;
      const bool all_nullable = std::all_of(p.rhs.begin(), p.rhs.end(), [&](Symbol s) {
        return !s.terminal && g.nullable_[s.id];
      });
      if (all_nullable) {
        g.nullable_[p.lhs] = true;
        changed = true;
      }
    }
  }
  return g;
}

std::optional<int> Grammar::find_nonterminal(std::string_view name) const {
  auto it = std::find(nonterminals_.begin(), nonterminals_.end(), name);
  if (it == nonterminals_.end()) return std::nullopt;
  return static_cast<int>(it - nonterminals_.begin());
}

Grammar::Builder Grammar::to_builder() const {
  Builder b;
  b.nonterminals_ = nonterminals_;
  b.terminals_ = terminals_;
  b.productions_ = productions_;
  return b;
}

std::string Grammar::dump() const {
  std::string out;
  auto emit = [&](int nt) {
    out += nonterminals_[nt] + " ::= ";
    bool first = true;
    for (int p : by_lhs_[nt]) {
      if (!first) out += " | ";
      first = false;
      const auto& rhs = productions_[p].rhs;
      if (rhs.empty()) out += "\"\"";
      for (std::size_t i = 0; i < rhs.size(); ++i) {
        if (i) out += ' ';
        out += rhs[i].terminal ? terminals_[rhs[i].id].display()
                               : nonterminals_[rhs[i].id];
      }
    }
    out += '\n';
  };
  emit(start_);
  for (int i = 0; i < static_cast<int>(nonterminals_.size()); ++i) {
    if (i != start_) emit(i);
  }
  return out;
}

Grammar build_full_grammar(const OperationRegistry& registry) {
  using B = Grammar::Builder;
  B b;
  const int query = b.nonterminal(kQueryRule);
  const int clause = b.nonterminal(kClauseRule);
  std::optional<int> filter_clause;

  for (const OperationSpec& op : registry.operations()) {
    if (op.is_logic()) continue;
    const int rule = b.nonterminal(operation_rule(op.name));
    std::vector<Symbol> rhs{B::t(b.literal(op.name))};
    for (const SlotSpec& slot : op.slots) {
      std::vector<Symbol> content;
      switch (slot.kind) {
        case SlotKind::kInteger:
          content = {B::t(b.literal(slot.name)), B::t(b.integer())};
          break;
        case SlotKind::kEnumToken: {
          const int values = b.nonterminal(op.name + "." + slot.name);
          for (const auto& v : slot.allowed_values) b.add(values, {B::t(b.literal(v))});
          content = {B::n(values)};
          break;
        }
        case SlotKind::kFreeToken:
          content = {B::t(b.free_token())};
          break;
        case SlotKind::kNone:
          content = {B::t(b.literal(slot.name))};
          break;
      }
      // Canonical form always spells out defaults, so only optional slots
      // without a default may be omitted.
      if (slot.required || slot.default_value) {
        rhs.insert(rhs.end(), content.begin(), content.end());
      } else {
        const int opt = b.nonterminal(op.name + "." + slot.name + "?");
        b.add(opt, {});
        b.add(opt, content);
        rhs.push_back(B::n(opt));
      }
    }
    b.add(rule, std::move(rhs));
    if (op.is_filter()) {
      if (!filter_clause) {
        filter_clause = b.nonterminal(kFilterClauseRule);
        b.add(clause, {B::n(*filter_clause)});
      }
      b.add(*filter_clause, {B::n(rule)});
    } else {
      b.add(clause, {B::n(rule)});
    }
  }
  b.add(query, {B::n(clause)});
  for (const OperationSpec& op : registry.operations()) {
    if (op.is_logic() && is_connector(op.name)) {
      b.add(query, {B::n(query), B::t(b.literal(op.name)), B::n(clause)});
    }
  }
  return b.build(query);
}

Grammar derive_intent_only_grammar(const OperationRegistry& registry,
                                   std::span<const std::string> only) {
  using B = Grammar::Builder;
  B b;
  const int intent = b.nonterminal("intent");
  if (only.empty()) {
    for (const OperationSpec& op : registry.operations()) {
      if (op.is_logic() || op.is_filter()) continue;
      b.add(intent, {B::t(b.literal(op.name))});
    }
  } else {
    for (const std::string& name : only) {
      if (!registry.contains(name)) {
        throw std::invalid_argument("unknown operation: " + name);
      }
      b.add(intent, {B::t(b.literal(name))});
    }
  }
  return b.build(intent);
}

Grammar derive_intent_grammar(const Grammar& grammar, std::string_view operation) {
  using B = Grammar::Builder;
  const auto op_rule = grammar.find_nonterminal(operation_rule(operation));
  if (!op_rule) {
    throw std::invalid_argument("unknown operation: " + std::string(operation));
  }
  B b = grammar.to_builder();
  const int intent = b.nonterminal("intent:" + std::string(operation));
  b.add(intent, {B::n(*op_rule)});
  if (const auto filters = grammar.find_nonterminal(kFilterClauseRule)) {
    const int prefix = b.nonterminal("filter_prefix");
    const int conj = b.literal("and");
    b.add(prefix, {B::n(*filters), B::t(conj)});
    b.add(prefix, {B::n(prefix), B::n(*filters), B::t(conj)});
    b.add(intent, {B::n(prefix), B::n(*op_rule)});
  }
  return b.build(intent);
}

std::vector<std::string> enumerate_sentences(const Grammar& grammar,
                                             std::size_t max_tokens,
                                             std::span<const std::string> integer_samples,
                                             std::span<const std::string> free_samples) {
  const std::size_t nt_count = grammar.nonterminal_count();
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 4;

  // Shortest terminal yield of each non-terminal.
  std::vector<std::size_t> min_len(nt_count, kInf);
  for (bool changed = true; changed;) {
    changed = false;
    for (const Production& p : grammar.productions()) {
      std::size_t total = 0;
      for (const Symbol& s : p.rhs) total += s.terminal ? 1 : min_len[s.id];
      if (total < min_len[p.lhs]) {
        min_len[p.lhs] = total;
        changed = true;
      }
    }
  }

  std::set<std::string> out;
  std::function<void(const std::vector<Symbol>&)> expand;
  auto instantiate = [&](const std::vector<Symbol>& form) {
    std::vector<std::string> partial{""};
    for (const Symbol& s : form) {
      const Terminal& t = grammar.terminals()[s.id];
      std::vector<std::string> choices;
      switch (t.kind) {
        case Terminal::Kind::kLiteral:
          choices = {t.text};
          break;
        case Terminal::Kind::kInteger:
          choices.assign(integer_samples.begin(), integer_samples.end());
          break;
        case Terminal::Kind::kFreeToken:
          choices.assign(free_samples.begin(), free_samples.end());
          break;
      }
      std::vector<std::string> next;
      for (const auto& prefix : partial) {
        for (const auto& c : choices) next.push_back(prefix.empty() ? c : prefix + " " + c);
      }
      partial = std::move(next);
    }
    for (auto& s : partial) {
      if (!s.empty()) out.insert(std::move(s));
    }
  };
  expand = [&](const std::vector<Symbol>& form) {
    std::size_t bound = 0;
    for (const Symbol& s : form) bound += s.terminal ? 1 : min_len[s.id];
    if (bound > max_tokens) return;
    auto first_nt = std::find_if(form.begin(), form.end(),
                                 [](Symbol s) { return !s.terminal; });
    if (first_nt == form.end()) {
      instantiate(form);
      return;
    }
    const std::size_t at = static_cast<std::size_t>(first_nt - form.begin());
    for (int p : grammar.productions_for(first_nt->id)) {
      std::vector<Symbol> next(form.begin(), form.begin() + at);
      const auto& rhs = grammar.productions()[p].rhs;
      next.insert(next.end(), rhs.begin(), rhs.end());
      next.insert(next.end(), form.begin() + at + 1, form.end());
      expand(next);
    }
  };
  expand({Symbol{false, grammar.start()}});
  return {out.begin(), out.end()};
}

}  // namespace xql
