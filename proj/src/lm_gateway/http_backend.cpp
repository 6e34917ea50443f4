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

#include "xql/http_backend.hpp"

#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "xql/error.hpp"

namespace xql {
namespace {

using nlohmann::json;

bool looks_like_context_overflow(const std::string& body) {
  return body.find("context_length") != std::string::npos ||
         body.find("maximum context length") != std::string::npos;
}

}  // namespace

HttpBackendConfig HttpBackendConfig::from_json(const json& j) {
  HttpBackendConfig c;
  c.url = j.at("url").get<std::string>();
  c.model = j.value("model", std::string{});
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.timeout = std::chrono::seconds(j.value("timeout_seconds", 60));
  c.logit_bias = j.value("logit_bias", false);
  c.retry.max_attempts = j.value("max_attempts", c.retry.max_attempts);
  return c;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("backend url needs a scheme: " + config_.url);
  const auto path_start = config_.url.find('/', scheme_end + 3);
  origin_ = config_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

json HttpBackend::post_once(const std::string& payload) const {
  httplib::Client client(origin_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(path_, headers, payload, "application/json");
  if (!res) {
    throw TransportError("POST " + config_.url + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("POST " + config_.url + " returned " + std::to_string(res->status));
  }
  if (res->status >= 400) {
    if (looks_like_context_overflow(res->body)) throw ContextLengthError(res->body);
    throw BackendError("POST " + config_.url + " returned " + std::to_string(res->status) +
                       ": " + res->body);
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("unparseable backend response: ") + e.what());
  }
}

json HttpBackend::post(const json& body) const {
  const std::string payload = body.dump();
  auto sleep = config_.sleep ? config_.sleep : [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
  return with_retries(config_.retry, [&] { return post_once(payload); }, sleep);
}

Completion HttpBackend::complete(const GenerationRequest& request) {
  json body = {{"model", config_.model},
               {"prompt", request.prompt},
               {"max_tokens", request.max_new_tokens},
               {"temperature", request.temperature}};
  if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;
  json response = post(body);
  const json* choice = nullptr;
  if (auto it = response.find("choices"); it != response.end() && it->is_array() && !it->empty()) {
    choice = &it->front();
  }
  if (!choice || !choice->contains("text") || !(*choice)["text"].is_string()) {
    throw BackendError("backend response lacks choices[0].text");
  }
  Completion c;
  c.text = (*choice)["text"].get<std::string>();
  const std::string reason = choice->value("finish_reason", std::string{"stop"});
  c.finish_reason = reason == "length" ? FinishReason::kLength : FinishReason::kEos;
  if (auto u = response.find("usage"); u != response.end() && u->contains("completion_tokens")) {
    c.token_count = (*u)["completion_tokens"].get<int>();
  }
  c.raw_backend_payload = std::move(response);
  return c;
}

StepChoice HttpBackend::next_token(const StepContext& context) {
  if (!config_.logit_bias) return Backend::next_token(context);
  json bias = json::object();
  for (TokenId id : context.mask.allowed) bias[std::to_string(id)] = 100;
  json body = {{"model", config_.model},
               {"prompt", std::string(context.prompt) + std::string(context.generated)},
               {"max_tokens", 1},
               {"temperature", context.temperature},
               {"logit_bias", bias}};
  json response = post(body);
  std::string text;
  if (auto it = response.find("choices"); it != response.end() && it->is_array() && !it->empty()) {
    text = it->front().value("text", std::string{});
  }
  if (text.empty()) return {true, -1};
  if (auto id = context.tokenizer.find(text)) return {false, *id};
  return {true, -1};
}

}  // namespace xql
