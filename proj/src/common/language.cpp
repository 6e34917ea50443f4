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

#include "xql/language.hpp"

#include "xql/error.hpp"
#include "xql/text.hpp"

namespace xql {

std::string_view code(Language language) {
  switch (language) {
    case Language::kEN: return "EN";
    case Language::kZH: return "ZH";
    case Language::kDE: return "DE";
    case Language::kRU: return "RU";
    case Language::kTE: return "TE";
  }
  return "??";
}

std::string_view display_name(Language language) {
  switch (language) {
    case Language::kEN: return "English";
    case Language::kZH: return "Chinese";
    case Language::kDE: return "German";
    case Language::kRU: return "Russian";
    case Language::kTE: return "Telugu";
  }
  return "Unknown";
}

std::optional<Language> parse_language(std::string_view text) {
  const std::string lowered = to_lower_ascii(trim(text));
  for (Language l : kAllLanguages) {
    if (to_lower_ascii(code(l)) == lowered) return l;
  }
  return std::nullopt;
}

Language require_language(std::string_view text) {
  if (auto l = parse_language(text)) return *l;
  throw ConfigError("unsupported language '" + std::string(text) +
                    "' (expected one of EN, ZH, DE, RU, TE)");
}

}  // namespace xql
