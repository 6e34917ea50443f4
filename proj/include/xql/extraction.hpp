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

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "xql/backend.hpp"
#include "xql/embedding.hpp"
#include "xql/language.hpp"
#include "xql/prompts.hpp"
#include "xql/registry.hpp"

namespace xql {

struct CompassRecord {
  std::string user_question;
  std::string operation_name;
  std::string custom_input;
  Language language = Language::kEN;

  bool operator==(const CompassRecord&) const = default;
};

enum class Approach { kNaive, kTanl, kGptNer, kGollie };

inline constexpr Approach kAllApproaches[] = {Approach::kNaive, Approach::kTanl,
                                              Approach::kGptNer, Approach::kGollie};

std::string_view to_string(Approach approach);
std::optional<Approach> parse_approach(std::string_view text);

enum class DecodeErrorKind { kMissingAnnotation, kUnbalancedMarkers, kNotAList };

std::string_view to_string(DecodeErrorKind kind);

struct DecodeError {
  DecodeErrorKind kind;
  std::string message;
};

/// Outcome of decoding one model answer. `extracted` is absent both for an
/// explicit "nothing" answer and for errors; `error` tells them apart.
struct Decoded {
  std::optional<std::string> extracted;
  std::optional<DecodeError> error;
  std::vector<std::string> diagnostics;  // e.g. "MultipleAnnotations"
};

Decoded decode_naive(std::string_view raw);
Decoded decode_tanl(std::string_view raw);
Decoded decode_gptner(std::string_view raw);
Decoded decode_gollie(std::string_view raw);
Decoded decode(Approach approach, std::string_view raw);

/// Demonstration answers in each approach's format. TANL and GPT-NER mark
/// the first occurrence of `span` inside `question`; when the span does not
/// occur, the marked span is returned on its own.
std::string encode_naive(std::string_view span);
std::string encode_tanl(std::string_view span, std::string_view question);
std::string encode_gptner(std::string_view span, std::string_view question);
std::string encode_gollie(std::string_view span);
std::string encode(Approach approach, std::string_view span, std::string_view question);

/// Substring test after NFC normalisation of both sides.
bool validate_containment(std::string_view extracted, std::string_view question);

struct ExtractionDemo {
  std::string question;
  std::string custom_input;
};

/// Prompt with the approach's instruction, demonstrations answered in the
/// approach's format, and the question. `lang` selects a per-language
/// template override when one exists.
std::string build_extraction_prompt(Approach approach, std::string_view question,
                                    std::span<const ExtractionDemo> demos,
                                    const PromptLibrary& prompts, std::string_view lang = {});

struct ExtractionResult {
  Approach approach = Approach::kNaive;
  std::string prompt;
  std::string raw_output;
  std::optional<std::string> extracted;
  bool contained = false;
  std::optional<DecodeError> decode_error;
  std::vector<std::string> diagnostics;

  nlohmann::json to_json() const;
};

/// Builds the prompt, generates, decodes, and checks containment.
ExtractionResult extract_custom_input(Approach approach, const std::string& question,
                                      std::span<const ExtractionDemo> demos,
                                      const PromptLibrary& prompts, Backend& backend,
                                      std::string_view lang = {}, int max_new_tokens = 128);

struct ExtractionScore {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t decode_errors = 0;
  std::size_t not_contained = 0;
  double micro_f1 = 0;         // exact match, percent
  double char_overlap_f1 = 0;  // micro over code-point multisets, percent
};

/// Exact match after NFC and trimming. Throws std::invalid_argument when the
/// lists are not aligned.
ExtractionScore score_extraction(std::span<const ExtractionResult> results,
                                 std::span<const CompassRecord> golds);

/// Maps model-emitted intent labels onto registry names. The file is a JSON
/// object keyed by lower-case language code, each holding alias -> name.
class AliasTable {
 public:
  AliasTable() = default;
  static AliasTable load(const std::filesystem::path& path);
  static AliasTable from_json(const nlohmann::json& j);

  /// Registry name for `label`, trying an exact name, then aliases of
  /// `lang`, then aliases of every language.
  std::optional<std::string> normalize(std::string_view label, const OperationRegistry& registry,
                                       std::string_view lang = {}) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> by_language_;
};

struct IntentDemo {
  std::string question;
  std::string intent;
};

struct IntentClassification {
  std::string prompt;
  std::string raw_output;
  std::optional<std::string> intent;  // absent when the label is unknown
  std::vector<std::size_t> demo_indices;
};

/// Few-shot intent classification with `shots` similarity-selected demos.
IntentClassification classify_intent_fewshot(const std::string& question,
                                             const EmbeddedPool& train, EmbeddingProvider& provider,
                                             Backend& backend, const OperationRegistry& registry,
                                             const AliasTable& aliases,
                                             const PromptLibrary& prompts,
                                             std::string_view lang = {}, std::size_t shots = 10);

}  // namespace xql
