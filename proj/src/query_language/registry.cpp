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

#include "xql/registry.hpp"

#include <algorithm>
#include <fstream>

#include "xql/error.hpp"

namespace xql {
namespace {

using nlohmann::json;

constexpr std::pair<std::string_view, OperationCategory> kCategories[] = {
    {"local_prediction", OperationCategory::kLocalPrediction},
    {"global_prediction", OperationCategory::kGlobalPrediction},
    {"local_explanation", OperationCategory::kLocalExplanation},
    {"perturbation", OperationCategory::kPerturbation},
    {"data", OperationCategory::kData},
    {"modification", OperationCategory::kModification},
    {"meta", OperationCategory::kMeta},
    {"filter", OperationCategory::kFilter},
    {"logic", OperationCategory::kLogic},
};

constexpr std::pair<std::string_view, SlotKind> kSlotKinds[] = {
    {"integer", SlotKind::kInteger},
    {"enum_token", SlotKind::kEnumToken},
    {"free_token", SlotKind::kFreeToken},
    {"none", SlotKind::kNone},
};

bool is_identifier(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || c == '_';
  });
}

std::string require_string(const json& obj, const char* key,
                           const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw SchemaError(where + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

SlotSpec parse_slot(const json& j, const std::string& op_name) {
  const std::string where = "operation '" + op_name + "'";
  if (!j.is_object()) throw SchemaError(where + ": slot is not an object");
  SlotSpec slot;
  slot.name = require_string(j, "name", where);
  if (!is_identifier(slot.name)) {
    throw SchemaError(where + ": bad slot name '" + slot.name + "'");
  }
  const std::string kind = require_string(j, "kind", where);
  auto kind_it = std::find_if(std::begin(kSlotKinds), std::end(kSlotKinds),
                              [&](const auto& p) { return p.first == kind; });
  if (kind_it == std::end(kSlotKinds)) {
    throw SchemaError(where + ": malformed slot kind '" + kind + "'");
  }
  slot.kind = kind_it->second;
  slot.required = j.value("required", true);
  if (auto it = j.find("allowed_values"); it != j.end() && !it->is_null()) {
    slot.allowed_values = it->get<std::vector<std::string>>();
  }
  if (auto it = j.find("default"); it != j.end() && !it->is_null()) {
    slot.default_value = it->is_string() ? it->get<std::string>() : it->dump();
  }

  const std::string slot_where = where + " slot '" + slot.name + "'";
  if (slot.kind == SlotKind::kEnumToken && slot.allowed_values.empty()) {
    throw SchemaError(slot_where + ": enum slot with empty value set");
  }
  if (slot.kind != SlotKind::kEnumToken && !slot.allowed_values.empty()) {
    throw SchemaError(slot_where + ": allowed_values on a non-enum slot");
  }
  if (slot.required && slot.default_value) {
    throw SchemaError(slot_where + ": required slot cannot carry a default");
  }
  if (slot.default_value && !slot.allows(*slot.default_value)) {
    throw SchemaError(slot_where + ": default '" + *slot.default_value +
                      "' is not a valid value");
  }
  if (slot.kind == SlotKind::kNone && slot.default_value) {
    throw SchemaError(slot_where + ": flag slots cannot carry a default");
  }
  return slot;
}

}  // namespace

std::string_view to_string(OperationCategory category) {
  for (const auto& [name, value] : kCategories) {
    if (value == category) return name;
  }
  return "unknown";
}

std::string_view to_string(SlotKind kind) {
  for (const auto& [name, value] : kSlotKinds) {
    if (value == kind) return name;
  }
  return "unknown";
}

bool is_canonical_integer(std::string_view token) {
  if (token.empty() || token.size() > 9) return false;
  if (!std::all_of(token.begin(), token.end(),
                   [](char c) { return c >= '0' && c <= '9'; })) {
    return false;
  }
  return token.size() == 1 || token.front() != '0';
}

bool is_connector(std::string_view token) {
  return token == "and" || token == "or";
}

bool is_free_token(std::string_view token) {
  if (token.empty() || is_connector(token)) return false;
  return std::all_of(token.begin(), token.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

bool SlotSpec::allows(std::string_view value) const {
  switch (kind) {
    case SlotKind::kInteger:
      return is_canonical_integer(value);
    case SlotKind::kEnumToken:
      return std::find(allowed_values.begin(), allowed_values.end(), value) !=
             allowed_values.end();
    case SlotKind::kFreeToken:
      return is_free_token(value);
    case SlotKind::kNone:
      return value == name;
  }
  return false;
}

const SlotSpec* OperationSpec::find_slot(std::string_view slot) const {
  for (const auto& s : slots) {
    if (s.name == slot) return &s;
  }
  return nullptr;
}

std::string OperationSpec::signature() const {
  std::string out = name;
  for (const auto& slot : slots) {
    std::string piece;
    switch (slot.kind) {
      case SlotKind::kInteger:
        piece = slot.name + " <int>";
        break;
      case SlotKind::kEnumToken: {
        piece = "{";
        for (std::size_t i = 0; i < slot.allowed_values.size(); ++i) {
          if (i) piece += "|";
          piece += slot.allowed_values[i];
        }
        piece += "}";
        break;
      }
      case SlotKind::kFreeToken:
        piece = "<" + slot.name + ">";
        break;
      case SlotKind::kNone:
        piece = slot.name;
        break;
    }
    if (!slot.required) piece = "[" + piece + "]";
    out += " " + piece;
  }
  return out;
}

OperationRegistry OperationRegistry::from_json(const json& document) {
  if (!document.is_object()) {
    throw SchemaError("registry document must be a JSON object");
  }
  OperationRegistry registry;
  registry.name_ = document.value("name", "");
  auto ops = document.find("operations");
  if (ops == document.end() || !ops->is_array() || ops->empty()) {
    throw SchemaError("registry: no operations defined");
  }
  for (const auto& entry : *ops) {
    if (!entry.is_object()) throw SchemaError("registry: operation is not an object");
    OperationSpec op;
    op.name = require_string(entry, "name", "registry");
    const std::string where = "operation '" + op.name + "'";
    if (!is_identifier(op.name)) {
      throw SchemaError(where + ": name must match [a-z_]+");
    }
    const std::string category = require_string(entry, "category", where);
    auto cat_it = std::find_if(std::begin(kCategories), std::end(kCategories),
                               [&](const auto& p) { return p.first == category; });
    if (cat_it == std::end(kCategories)) {
      throw SchemaError(where + ": unknown category '" + category + "'");
    }
    op.category = cat_it->second;
    op.description = entry.value("description", "");
    op.accepts_custom_input = entry.value("accepts_custom_input", false);
    if (auto slots = entry.find("slots"); slots != entry.end()) {
      if (!slots->is_array()) throw SchemaError(where + ": slots must be an array");
      for (const auto& s : *slots) op.slots.push_back(parse_slot(s, op.name));
    }
    if (op.is_logic() && !op.slots.empty()) {
      throw SchemaError(where + ": logic operations take operands, not slots");
    }
    for (std::size_t i = 0; i < op.slots.size(); ++i) {
      for (std::size_t j = i + 1; j < op.slots.size(); ++j) {
        if (op.slots[i].name == op.slots[j].name) {
          throw SchemaError(where + ": duplicate slot '" + op.slots[i].name + "'");
        }
      }
    }
    if (registry.index_.count(op.name)) {
      throw SchemaError("registry: duplicate operation name '" + op.name + "'");
    }
    registry.index_.emplace(op.name, registry.operations_.size());
    registry.operations_.push_back(std::move(op));
  }
  return registry;
}

OperationRegistry OperationRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open registry file " + path.string());
  json document;
  try {
    document = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("registry " + path.string() + ": " + e.what());
  }
  return from_json(document);
}

const OperationSpec* OperationRegistry::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &operations_[it->second];
}

std::vector<std::string> OperationRegistry::intent_names() const {
  std::vector<std::string> names;
  for (const auto& op : operations_) {
    if (!op.is_logic()) names.push_back(op.name);
  }
  return names;
}

nlohmann::json OperationRegistry::to_json() const {
  json ops = json::array();
  for (const auto& op : operations_) {
    json slots = json::array();
    for (const auto& s : op.slots) {
      json slot = {{"name", s.name},
                   {"kind", std::string(to_string(s.kind))},
                   {"required", s.required}};
      if (!s.allowed_values.empty()) slot["allowed_values"] = s.allowed_values;
      if (s.default_value) slot["default"] = *s.default_value;
      slots.push_back(std::move(slot));
    }
    ops.push_back({{"name", op.name},
                   {"category", std::string(to_string(op.category))},
                   {"slots", std::move(slots)},
                   {"accepts_custom_input", op.accepts_custom_input},
                   {"description", op.description}});
  }
  return {{"name", name_}, {"operations", std::move(ops)}};
}

}  // namespace xql
