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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xql/backend.hpp"

namespace xql {

/// What the scripted backend answers for one prompt: a full text, per-step
/// token preferences for constrained decoding, or both.
struct ScriptedResponse {
  std::optional<std::string> text;
  /// steps[i] lists preferred token strings for step i; "<eos>" stands for
  /// end of sequence.
  std::vector<std::vector<std::string>> steps;
};

inline constexpr std::string_view kEosToken = "<eos>";

/// Deterministic offline backend keyed by prompt fingerprint. An unknown
/// fingerprint raises FixtureMissError; there is no fallback answer.
///
/// In constrained mode the backend ranks its scripted preferences first; if
/// none is allowed it falls back to eos (when allowed) and then to the
/// lowest allowed token id.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend(std::shared_ptr<const Tokenizer> tokenizer,
                  std::map<std::string, ScriptedResponse> fixtures = {},
                  std::string id = "scripted");

  /// File format: {"fixtures": {"<fingerprint>": {"text": ..., "steps": ...}},
  /// "by_prompt": [{"prompt": ..., "text": ...}]}.
  static ScriptedBackend load(const std::filesystem::path& path,
                              std::shared_ptr<const Tokenizer> tokenizer);

  /// Not thread-safe; finish populating before concurrent use.
  void add(std::string_view prompt, ScriptedResponse response);
  void add_fingerprint(std::string fingerprint, ScriptedResponse response);

  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;
  std::size_t size() const { return fixtures_.size(); }

  std::string id() const override { return id_; }
  Completion complete(const GenerationRequest& request) override;
  bool supports_token_control() const override { return true; }
  StepChoice next_token(const StepContext& context) override;

 private:
  const ScriptedResponse& lookup(std::string_view prompt) const;

  std::shared_ptr<const Tokenizer> tokenizer_;
  std::map<std::string, ScriptedResponse> fixtures_;
  std::map<std::string, std::string> previews_;
  std::string id_;
};

ScriptedResponse scripted_response_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScriptedResponse& response);

}  // namespace xql
