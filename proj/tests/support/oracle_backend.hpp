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

#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "xql/scripted_backend.hpp"

namespace xql::testing {

/// Answers each new prompt through `answer`, stores the answer as a scripted
/// fixture, and then behaves exactly like the scripted backend. The recorded
/// fixtures can be replayed through a plain ScriptedBackend. Calls are
/// serialized, so parallel evaluation runs may share one instance.
class OracleBackend : public Backend {
 public:
  OracleBackend(std::shared_ptr<const Tokenizer> tokenizer,
                std::function<std::string(const std::string&)> answer)
      : recorded_(std::move(tokenizer), {}, "oracle"), answer_(std::move(answer)) {}

  std::string id() const override { return "oracle"; }
  Completion complete(const GenerationRequest& request) override {
    std::lock_guard lock(mutex_);
    ensure(request.prompt);
    return recorded_.complete(request);
  }
  bool supports_token_control() const override { return true; }
  StepChoice next_token(const StepContext& context) override {
    std::lock_guard lock(mutex_);
    ensure(std::string(context.prompt));
    return recorded_.next_token(context);
  }

  const ScriptedBackend& recorded() const { return recorded_; }
  const std::vector<std::string>& prompts() const { return prompts_; }

 private:
  void ensure(const std::string& prompt) {
    if (seen_.insert(prompt).second) {
      prompts_.push_back(prompt);
      ScriptedResponse r;
      r.text = answer_(prompt);
      recorded_.add(prompt, r);
    }
  }

  ScriptedBackend recorded_;
  std::function<std::string(const std::string&)> answer_;
  std::set<std::string> seen_;
  std::vector<std::string> prompts_;
  std::mutex mutex_;
};

/// The question a parsing prompt ends with ("Question: ...").
inline std::string prompt_question(const std::string& prompt) {
  const auto at = prompt.rfind("Question: ");
  if (at == std::string::npos) return {};
  const auto start = at + 10;
  return prompt.substr(start, prompt.find('\n', start) - start);
}

}  // namespace xql::testing
