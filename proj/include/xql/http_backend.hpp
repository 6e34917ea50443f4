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

#include <chrono>
#include <functional>
#include <memory>
#include <string>

#include "json.hpp"
#include "xql/backend.hpp"
#include "xql/retry.hpp"

namespace xql {

/// Client for a completions-style HTTP endpoint.
///
/// Request body: {"model", "prompt", "max_tokens", "temperature", "stop"},
/// plus "logit_bias" in token-control mode. Response: choices[0].text and,
/// when present, choices[0].finish_reason and usage.completion_tokens.
struct HttpBackendConfig {
  std::string url;  // e.g. http://localhost:8000/v1/completions
  std::string model;
  std::string api_key_env = "XQL_API_KEY";
  std::chrono::seconds timeout{60};
  /// Only enable when the endpoint honours logit_bias and shares the
  /// tokenizer's vocabulary ids.
  bool logit_bias = false;
  RetryPolicy retry;
  std::function<void(std::chrono::milliseconds)> sleep;  // tests swap this out

  static HttpBackendConfig from_json(const nlohmann::json& j);
};

/// Thread-safe: each request opens its own connection.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  std::string id() const override { return "http:" + config_.model; }
  Completion complete(const GenerationRequest& request) override;
  bool supports_token_control() const override { return config_.logit_bias; }
  StepChoice next_token(const StepContext& context) override;

  const HttpBackendConfig& config() const { return config_; }

 private:
  nlohmann::json post(const nlohmann::json& body) const;
  nlohmann::json post_once(const std::string& payload) const;

  HttpBackendConfig config_;
  std::string origin_;
  std::string path_;
  std::string api_key_;
};

}  // namespace xql
