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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xql/recognizer.hpp"
#include "xql/tokenizer.hpp"

namespace xql {

struct GenerationRequest {
  std::string prompt;
  int max_new_tokens = 64;
  std::vector<std::string> stop_sequences;
  double temperature = 0.0;
  std::optional<PrefixRecognizer> constraint;
};

enum class FinishReason { kStop, kLength, kEos, kConstraintExhausted };

std::string_view to_string(FinishReason reason);

struct Completion {
  std::string text;  // prompt excluded
  FinishReason finish_reason = FinishReason::kEos;
  int token_count = 0;
  nlohmann::json raw_backend_payload;
};

/// One decoding step under a token mask.
struct StepContext {
  std::string_view prompt;
  std::string_view generated;
  const TokenMask& mask;
  const Tokenizer& tokenizer;
  int step = 0;
  double temperature = 0.0;
};

struct StepChoice {
  bool eos = false;
  TokenId token = -1;
};

/// A text generator. Every backend offers text completion; some also accept
/// per-step token masks. Evaluation runs call one backend from several
/// threads, so implementations must tolerate concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string id() const = 0;

  /// Plain completion. Implementations honour max_new_tokens and may apply
  /// stop sequences themselves; generate() trims them again regardless.
  virtual Completion complete(const GenerationRequest& request) = 0;

  virtual bool supports_token_control() const { return false; }

  /// Picks the next token from `context.mask` (or eos when allowed). Only
  /// called when supports_token_control() is true.
  virtual StepChoice next_token(const StepContext& context);
};

}  // namespace xql
