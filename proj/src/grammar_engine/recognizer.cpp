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

#include "xql/recognizer.hpp"

#include <algorithm>
#include <unordered_set>

namespace xql {
namespace {

bool is_digit_char(char c) { return c >= '0' && c <= '9'; }

std::uint64_t item_key(std::int32_t production, std::int32_t dot, std::int32_t origin) {
  return (static_cast<std::uint64_t>(production) << 40) ^
         (static_cast<std::uint64_t>(dot) << 32) ^ static_cast<std::uint32_t>(origin);
}

}  // namespace

PrefixRecognizer::PrefixRecognizer(std::shared_ptr<const Grammar> grammar)
    : grammar_(std::move(grammar)), frozen_(std::make_shared<const std::vector<SetPtr>>()) {
  std::vector<Item> seeds;
  for (int p : grammar_->productions_for(grammar_->start())) seeds.push_back({p, 0, 0});
  push_set(close(std::move(seeds)));
  live_ = last_set().expected;
}

void PrefixRecognizer::push_set(SetPtr set) {
  constexpr std::size_t kTailLimit = 16;
  tail_.push_back(std::move(set));
  if (tail_.size() < kTailLimit) return;
  auto merged = std::make_shared<std::vector<SetPtr>>(*frozen_);
  merged->insert(merged->end(), std::make_move_iterator(tail_.begin()),
                 std::make_move_iterator(tail_.end()));
  frozen_ = std::move(merged);
  tail_.clear();
}

std::shared_ptr<const PrefixRecognizer::ItemSet> PrefixRecognizer::close(
    std::vector<Item> seeds) const {
  const Grammar& g = *grammar_;
  const auto k = static_cast<std::int32_t>(chart_size());
  auto set = std::make_shared<ItemSet>();
  std::unordered_set<std::uint64_t> seen;
  auto add = [&](Item item) {
    if (seen.insert(item_key(item.production, item.dot, item.origin)).second) {
      set->items.push_back(item);
    }
  };
  for (const Item& s : seeds) add(s);

  auto& items = set->items;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Item item = items[i];
    const Production& prod = g.productions()[item.production];
    if (item.dot < static_cast<std::int32_t>(prod.rhs.size())) {
      const Symbol next = prod.rhs[item.dot];
      if (next.terminal) continue;
      for (int p : g.productions_for(next.id)) add({p, 0, k});
      if (g.nullable(next.id)) add({item.production, item.dot + 1, item.origin});
      continue;
    }
    // Completion.
    if (item.origin == k) {
      // Only reachable through a nullable non-terminal, which the prediction
      // step above already stepped over.
      continue;
    }
    for (const Item& parent : set_at(static_cast<std::size_t>(item.origin)).items) {
      const Production& pp = g.productions()[parent.production];
      if (parent.dot < static_cast<std::int32_t>(pp.rhs.size()) &&
          !pp.rhs[parent.dot].terminal && pp.rhs[parent.dot].id == prod.lhs) {
        add({parent.production, parent.dot + 1, parent.origin});
      }
    }
  }

  for (const Item& item : items) {
    const Production& prod = g.productions()[item.production];
    if (item.dot < static_cast<std::int32_t>(prod.rhs.size())) {
      const Symbol next = prod.rhs[item.dot];
      if (next.terminal) set->expected.push_back(next.id);
    } else if (prod.lhs == g.start() && item.origin == 0) {
      set->accepts = true;
    }
  }
  std::sort(set->expected.begin(), set->expected.end());
  set->expected.erase(std::unique(set->expected.begin(), set->expected.end()),
                      set->expected.end());
  return set;
}

std::vector<PrefixRecognizer::Item> PrefixRecognizer::scan(std::string_view token) const {
  const Grammar& g = *grammar_;
  std::vector<Item> seeds;
  for (const Item& item : last_set().items) {
    const Production& prod = g.productions()[item.production];
    if (item.dot >= static_cast<std::int32_t>(prod.rhs.size())) continue;
    const Symbol next = prod.rhs[item.dot];
    if (next.terminal && g.terminals()[next.id].matches(token)) {
      seeds.push_back({item.production, item.dot + 1, item.origin});
    }
  }
  return seeds;
}

bool PrefixRecognizer::advance_char(char c) {
  if (c == ' ') {
    if (partial_.empty()) return false;
    std::vector<Item> seeds = scan(partial_);
    if (seeds.empty()) return false;
    auto next = close(std::move(seeds));
    // A complete sentence may only be followed by a connector if the
    // grammar has one; an item set with nothing expected is a dead end.
    if (next->expected.empty()) return false;
    push_set(std::move(next));
    partial_.clear();
    live_ = last_set().expected;
    return true;
  }
  partial_.push_back(c);
  const Grammar& g = *grammar_;
  std::erase_if(live_, [&](int t) { return !g.terminals()[t].viable_prefix(partial_); });
  return !live_.empty();
}

bool PrefixRecognizer::advance(std::string_view piece) {
  if (rejected_) {
    consumed_.append(piece);
    return false;
  }
  for (std::size_t i = 0; i < piece.size(); ++i) {
    if (!advance_char(piece[i])) {
      rejected_ = true;
      consumed_.append(piece);
      return false;
    }
  }
  consumed_.append(piece);
  return true;
}

PrefixRecognizer PrefixRecognizer::advanced(std::string_view piece) const {
  PrefixRecognizer copy = *this;
  copy.advance(piece);
  return copy;
}

bool PrefixRecognizer::accepting() const {
  if (rejected_ || partial_.empty()) return false;
  std::vector<Item> seeds = scan(partial_);
  if (seeds.empty()) return false;
  return close(std::move(seeds))->accepts;
}

bool TokenMask::allows(TokenId id) const {
  return std::binary_search(allowed.begin(), allowed.end(), id);
}

VocabularyTrie::VocabularyTrie(std::span<const std::string> vocabulary)
    : vocabulary_size_(vocabulary.size()) {
  nodes_.emplace_back();
  for (std::size_t id = 0; id < vocabulary.size(); ++id) {
    std::int32_t node = 0;
    for (char c : vocabulary[id]) {
      auto& children = nodes_[node].children;
      auto it = std::find_if(children.begin(), children.end(),
                             [c](const auto& e) { return e.first == c; });
      if (it != children.end()) {
        node = it->second;
      } else {
        const auto fresh = static_cast<std::int32_t>(nodes_.size());
        nodes_[node].children.emplace_back(c, fresh);
        nodes_.emplace_back();
        node = fresh;
      }
    }
    // The empty string is never a useful continuation.
    if (node != 0) nodes_[node].tokens.push_back(static_cast<TokenId>(id));
  }
}

namespace {

/// `prefix` is already a viable prefix of `t`; is `prefix + c`?
bool extends(const Terminal& t, std::string_view prefix, char c) {
  switch (t.kind) {
    case Terminal::Kind::kLiteral:
      return prefix.size() < t.text.size() && t.text[prefix.size()] == c;
    case Terminal::Kind::kInteger:
      return is_digit_char(c) && prefix.size() < 9 && prefix != "0";
    case Terminal::Kind::kFreeToken:
      return (c >= 'a' && c <= 'z') || is_digit_char(c) || c == '_';
  }
  return false;
}

}  // namespace

namespace detail {

struct MaskSearch {
  const VocabularyTrie::Node* nodes;
  TokenMask& mask;
  std::vector<std::vector<int>> live_by_depth;

  static void run(const PrefixRecognizer& state, const VocabularyTrie& trie, TokenMask& mask) {
    MaskSearch search{trie.nodes_.data(), mask, {}};
    std::string partial = state.partial_;
    search.visit(0, state, partial, state.live_, 0);
  }

  // `rec` holds the chart; `partial` and `live` replace its in-token state.
  void visit(std::int32_t node, const PrefixRecognizer& rec, std::string& partial,
             const std::vector<int>& live, std::size_t depth);
};

}  // namespace detail

TokenMask allowed_continuations(const PrefixRecognizer& state, const VocabularyTrie& trie) {
  TokenMask mask;
  if (state.rejected()) return mask;
  mask.eos_allowed = state.accepting();
  detail::MaskSearch::run(state, trie, mask);
  std::sort(mask.allowed.begin(), mask.allowed.end());
  return mask;
}

void detail::MaskSearch::visit(std::int32_t node, const PrefixRecognizer& rec, std::string& partial,
                       const std::vector<int>& live, std::size_t depth) {
  if (live_by_depth.size() <= depth) live_by_depth.resize(depth + 1);
  const auto& terminals = rec.grammar().terminals();
  for (const auto& [c, child] : nodes[node].children) {
    const bool has_children = !nodes[child].children.empty();
    if (c == ' ') {
      PrefixRecognizer next = rec;
      next.consumed_.clear();
      next.partial_ = partial;
      next.live_ = live;
      if (!next.advance_char(' ')) continue;
      mask.allowed.insert(mask.allowed.end(), nodes[child].tokens.begin(), nodes[child].tokens.end());
      if (has_children) {
        std::string fresh;
        const std::vector<int> next_live = next.live_;
        visit(child, next, fresh, next_live, depth + 1);
      }
      continue;
    }
    std::vector<int>& kept = live_by_depth[depth];
    kept.clear();
    for (int t : live) {
      if (extends(terminals[t], partial, c)) kept.push_back(t);
    }
    if (kept.empty()) continue;
    mask.allowed.insert(mask.allowed.end(), nodes[child].tokens.begin(), nodes[child].tokens.end());
    if (has_children) {
      partial.push_back(c);
      // Deeper levels use their own buffers, so `kept` stays intact.
      const std::vector<int> here = kept;
      visit(child, rec, partial, here, depth + 1);
      partial.pop_back();
    }
  }
}

}  // namespace xql
