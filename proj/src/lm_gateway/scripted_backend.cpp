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

#include "xql/scripted_backend.hpp"

#include <algorithm>
#include <fstream>

#include "xql/error.hpp"
#include "xql/text.hpp"

namespace xql {
namespace {

using nlohmann::json;

// Token strings for `text`; falls back to one piece per code point when the
// vocabulary does not cover it (scripted translations, for instance).
std::vector<std::string> token_pieces(const Tokenizer& tokenizer, std::string_view text) {
  std::vector<std::string> pieces;
  try {
    for (TokenId id : tokenizer.encode(text)) pieces.push_back(tokenizer.token(id));
  } catch (const std::invalid_argument&) {
    pieces.clear();
    std::size_t i = 0;
    while (i < text.size()) {
      std::size_t j = i + 1;
      while (j < text.size() && (static_cast<unsigned char>(text[j]) & 0xC0) == 0x80) ++j;
      pieces.emplace_back(text.substr(i, j - i));
      i = j;
    }
  }
  return pieces;
}

}  // namespace

ScriptedResponse scripted_response_from_json(const json& j) {
  ScriptedResponse r;
  if (j.is_string()) {
    r.text = j.get<std::string>();
    return r;
  }
  if (auto it = j.find("text"); it != j.end() && it->is_string()) r.text = it->get<std::string>();
  if (auto it = j.find("steps"); it != j.end()) {
    r.steps = it->get<std::vector<std::vector<std::string>>>();
  }
  if (!r.text && r.steps.empty()) throw SchemaError("scripted fixture needs 'text' or 'steps'");
  return r;
}

json to_json(const ScriptedResponse& response) {
  json j = json::object();
  if (response.text) j["text"] = *response.text;
  if (!response.steps.empty()) j["steps"] = response.steps;
  return j;
}

ScriptedBackend::ScriptedBackend(std::shared_ptr<const Tokenizer> tokenizer,
                                 std::map<std::string, ScriptedResponse> fixtures,
                                 std::string id)
    : tokenizer_(std::move(tokenizer)), fixtures_(std::move(fixtures)), id_(std::move(id)) {}

ScriptedBackend ScriptedBackend::load(const std::filesystem::path& path,
                                      std::shared_ptr<const Tokenizer> tokenizer) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fixture file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("fixture file " + path.string() + ": " + e.what());
  }
  ScriptedBackend backend(std::move(tokenizer), {}, "scripted:" + path.filename().string());
  if (auto it = doc.find("fixtures"); it != doc.end()) {
    for (const auto& [fp, response] : it->items()) {
      backend.add_fingerprint(fp, scripted_response_from_json(response));
    }
  }
  if (auto it = doc.find("by_prompt"); it != doc.end()) {
    for (const auto& entry : *it) {
      backend.add(entry.at("prompt").get<std::string>(), scripted_response_from_json(entry));
    }
  }
  return backend;
}

void ScriptedBackend::add(std::string_view prompt, ScriptedResponse response) {
  const std::string fp = fingerprint128(prompt);
  previews_[fp] = std::string(prompt.substr(0, 80));
  fixtures_[fp] = std::move(response);
}

void ScriptedBackend::add_fingerprint(std::string fingerprint, ScriptedResponse response) {
  fixtures_[std::move(fingerprint)] = std::move(response);
}

json ScriptedBackend::to_json() const {
  json fixtures = json::object();
  for (const auto& [fp, response] : fixtures_) {
    json entry = xql::to_json(response);
    if (auto it = previews_.find(fp); it != previews_.end()) entry["prompt_preview"] = it->second;
    fixtures[fp] = std::move(entry);
  }
  return {{"fixtures", std::move(fixtures)}};
}

void ScriptedBackend::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write fixture file " + path.string());
  out << to_json().dump(2) << '\n';
}

const ScriptedResponse& ScriptedBackend::lookup(std::string_view prompt) const {
  const std::string fp = fingerprint128(prompt);
  auto it = fixtures_.find(fp);
  if (it == fixtures_.end()) throw FixtureMissError(fp);
  return it->second;
}

Completion ScriptedBackend::complete(const GenerationRequest& request) {
  const ScriptedResponse& response = lookup(request.prompt);
  std::string text;
  if (response.text) {
    text = *response.text;
  } else {
    for (const auto& step : response.steps) {
      if (step.empty() || step.front() == kEosToken) break;
      text += step.front();
    }
  }
  Completion completion;
  completion.raw_backend_payload = {{"fingerprint", fingerprint128(request.prompt)},
                                    {"text", text}};
  auto pieces = token_pieces(*tokenizer_, text);
  if (static_cast<int>(pieces.size()) > request.max_new_tokens) {
    pieces.resize(static_cast<std::size_t>(std::max(request.max_new_tokens, 0)));
    text.clear();
    for (const auto& p : pieces) text += p;
    completion.finish_reason = FinishReason::kLength;
  } else {
    completion.finish_reason = FinishReason::kEos;
  }
  completion.text = std::move(text);
  completion.token_count = static_cast<int>(pieces.size());
  return completion;
}

StepChoice ScriptedBackend::next_token(const StepContext& context) {
  const ScriptedResponse& response = lookup(context.prompt);
  const Tokenizer& tokenizer = context.tokenizer;

  std::vector<std::string> preferences;
  if (!response.steps.empty()) {
    if (context.step < static_cast<int>(response.steps.size())) {
      preferences = response.steps[context.step];
    }
  } else if (response.text && response.text->starts_with(context.generated)) {
    const std::string_view remaining =
        std::string_view(*response.text).substr(context.generated.size());
    if (remaining.empty()) {
      preferences.emplace_back(kEosToken);
    } else {
      // Longest vocabulary token that continues the script.
      for (std::size_t len = remaining.size(); len > 0; --len) {
        if (tokenizer.find(remaining.substr(0, len))) {
          preferences.emplace_back(remaining.substr(0, len));
        }
      }
    }
  }

  for (const auto& pref : preferences) {
    if (pref == kEosToken) {
      if (context.mask.eos_allowed) return {true, -1};
      continue;
    }
    if (auto id = tokenizer.find(pref); id && context.mask.allows(*id)) return {false, *id};
  }
  if (context.mask.eos_allowed) return {true, -1};
  if (context.mask.allowed.empty()) return {true, -1};
  return {false, context.mask.allowed.front()};
}

}  // namespace xql
