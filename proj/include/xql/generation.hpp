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

#include <string>
#include <string_view>

#include "xql/backend.hpp"
#include "xql/language.hpp"

namespace xql {

/// Plain completion; stop sequences are trimmed from the returned text.
Completion generate(const GenerationRequest& request, Backend& backend);

/// Rounds of rejection-with-repair for backends without token control.
inline constexpr int kRepairRounds = 3;

/// Grammar-constrained generation. `request.constraint` must be set and not
/// rejecting. With token control every step is restricted to the recognizer's
/// mask; otherwise text completions are repaired against the recognizer.
///
/// Stop sequences are ignored here; the grammar decides where output ends.
Completion generate_constrained(const GenerationRequest& request, Backend& backend,
                                const Tokenizer& tokenizer);

std::string translation_prompt(std::string_view text, Language target);

/// Throws BackendError when the backend returns nothing.
std::string translate(std::string_view text, Language target, Backend& backend);

/// Same, with the target given as a language code; unknown codes are a
/// ConfigError.
std::string translate(std::string_view text, std::string_view target_code, Backend& backend);

}  // namespace xql
