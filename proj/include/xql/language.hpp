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

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace xql {

/// The five languages of the multilingual datasets.
enum class Language { kEN, kZH, kDE, kRU, kTE };

inline constexpr std::array<Language, 5> kAllLanguages = {
    Language::kEN, Language::kZH, Language::kDE, Language::kRU, Language::kTE};

/// Upper-case code ("EN").
std::string_view code(Language language);
/// English name used in prompts ("German").
std::string_view display_name(Language language);
/// Accepts codes in any case ("de", "DE"); nullopt otherwise.
std::optional<Language> parse_language(std::string_view text);
/// As parse_language, but throws ConfigError naming the bad value.
Language require_language(std::string_view text);

}  // namespace xql
