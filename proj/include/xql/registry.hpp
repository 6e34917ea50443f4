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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace xql {

enum class OperationCategory {
  kLocalPrediction,
  kGlobalPrediction,
  kLocalExplanation,
  kPerturbation,
  kData,
  kModification,
  kMeta,
  kFilter,
  kLogic,
};

enum class SlotKind { kInteger, kEnumToken, kFreeToken, kNone };

std::string_view to_string(OperationCategory category);
std::string_view to_string(SlotKind kind);

struct SlotSpec {
  std::string name;
  SlotKind kind = SlotKind::kNone;
  std::vector<std::string> allowed_values;  // enum_token only
  bool required = true;
  std::optional<std::string> default_value;

  bool allows(std::string_view value) const;
};

struct OperationSpec {
  std::string name;
  OperationCategory category = OperationCategory::kMeta;
  std::vector<SlotSpec> slots;
  std::string description;
  bool accepts_custom_input = false;

  bool is_logic() const { return category == OperationCategory::kLogic; }
  bool is_filter() const { return category == OperationCategory::kFilter; }
  const SlotSpec* find_slot(std::string_view slot) const;
  /// Compact signature used in prompts, e.g. `nlpattribute topk <int> [method]`.
  std::string signature() const;
};

/// Immutable set of operations the label language is built from.
class OperationRegistry {
 public:
  /// Throws SchemaError on duplicate names, unknown slot kinds, empty enums,
  /// or a document with no operations.
  static OperationRegistry from_json(const nlohmann::json& document);
  static OperationRegistry load(const std::filesystem::path& path);

  const std::string& name() const { return name_; }
  std::span<const OperationSpec> operations() const { return operations_; }
  std::size_t size() const { return operations_.size(); }

  const OperationSpec* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  /// Every non-logic operation name, in registry order.
  std::vector<std::string> intent_names() const;

  nlohmann::json to_json() const;

 private:
  std::string name_;
  std::vector<OperationSpec> operations_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// True for a canonical non-negative decimal of at most 9 digits with no
/// leading zeros.
bool is_canonical_integer(std::string_view token);

/// True for a free token: `[a-z0-9_]+`, excluding the connector words.
bool is_free_token(std::string_view token);

bool is_connector(std::string_view token);

}  // namespace xql
