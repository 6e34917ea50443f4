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

#include "xql/generation.hpp"

#include <fmt/format.h>

#include "xql/error.hpp"
#include "xql/text.hpp"

namespace xql {
namespace {

// Cuts `text` at the earliest stop sequence. Returns true when it did.
bool trim_at_stop(std::string& text, const std::vector<std::string>& stops) {
  std::size_t cut = std::string::npos;
  for (const auto& stop : stops) {
    if (stop.empty()) continue;
    cut = std::min(cut, text.find(stop));
  }
  if (cut == std::string::npos) return false;
  text.resize(cut);
  return true;
}

Completion token_level(const GenerationRequest& request, Backend& backend,
                       const Tokenizer& tokenizer) {
  PrefixRecognizer state = *request.constraint;
  Completion out;
  out.raw_backend_payload = {{"mode", "token"}, {"backend", backend.id()}};
  for (int step = 0;; ++step) {
    if (step >= request.max_new_tokens) {
      out.finish_reason = FinishReason::kLength;
      break;
    }
    const TokenMask mask = allowed_continuations(state, tokenizer.trie());
    if (mask.empty()) {
      if (step == 0) {
        throw ConfigError("empty token mask at step 0: grammar and tokenizer do not fit");
      }
      out.finish_reason = FinishReason::kConstraintExhausted;
      break;
    }
    StepChoice choice = backend.next_token(
        {request.prompt, out.text, mask, tokenizer, step, request.temperature});
    if (choice.eos && mask.eos_allowed) {
      out.finish_reason = FinishReason::kEos;
      break;
    }
    if (choice.eos || !mask.allows(choice.token)) {
      if (mask.allowed.empty()) {
        out.finish_reason = FinishReason::kEos;
        break;
      }
      choice = {false, mask.allowed.front()};
    }
    const std::string& piece = tokenizer.token(choice.token);
    state.advance(piece);
    out.text += piece;
    ++out.token_count;
  }
  return out;
}

Completion repair_loop(const GenerationRequest& request, Backend& backend) {
  PrefixRecognizer state = *request.constraint;
  Completion out;
  out.raw_backend_payload = {{"mode", "repair"}, {"backend", backend.id()}, {"rounds", 0}};
  std::string accepted;
  for (int round = 0; round < kRepairRounds; ++round) {
    const int budget = request.max_new_tokens - out.token_count;
    if (budget <= 0) {
      out.text = accepted;
      out.finish_reason = FinishReason::kLength;
      return out;
    }
    GenerationRequest sub;
    sub.prompt = request.prompt + accepted;
    sub.max_new_tokens = budget;
    sub.stop_sequences = request.stop_sequences;
    sub.temperature = request.temperature;
    Completion c = backend.complete(sub);
    out.token_count += c.token_count;
    out.raw_backend_payload["rounds"] = round + 1;
    trim_at_stop(c.text, request.stop_sequences);

    // Longest viable prefix, remembering the last point where the text was
    // a complete sentence.
    PrefixRecognizer s = state;
    std::size_t viable = 0;
    std::optional<std::size_t> last_accept;
    if (!accepted.empty() && s.accepting()) last_accept = 0;
    for (std::size_t i = 0; i < c.text.size(); ++i) {
      PrefixRecognizer next = s.advanced(std::string_view(&c.text[i], 1));
      if (next.rejected()) break;
      s = std::move(next);
      viable = i + 1;
      if (s.accepting()) last_accept = viable;
    }
    if (viable == c.text.size() && s.accepting()) {
      out.text = accepted + c.text;
      out.finish_reason = FinishReason::kEos;
      return out;
    }
    if (viable < c.text.size() && last_accept) {
      out.text = accepted + c.text.substr(0, *last_accept);
      out.finish_reason = FinishReason::kEos;
      return out;
    }
    accepted += c.text.substr(0, viable);
    state = std::move(s);
  }
  out.text = accepted;
  out.finish_reason = FinishReason::kConstraintExhausted;
  return out;
}

}  // namespace

Completion generate(const GenerationRequest& request, Backend& backend) {
  if (request.max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
  Completion c = backend.complete(request);
  if (trim_at_stop(c.text, request.stop_sequences)) c.finish_reason = FinishReason::kStop;
  return c;
}

Completion generate_constrained(const GenerationRequest& request, Backend& backend,
                                const Tokenizer& tokenizer) {
  if (!request.constraint) throw std::invalid_argument("generate_constrained needs a constraint");
  if (request.constraint->rejected()) {
    throw std::invalid_argument("constraint state is already rejecting");
  }
  if (request.max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
  if (backend.supports_token_control()) return token_level(request, backend, tokenizer);
  return repair_loop(request, backend);
}

std::string translation_prompt(std::string_view text, Language target) {
  return fmt::format(
      "You are an excellent translator. Please translate the following text into {}. "
      "Provide only the translated texts: {}",
      display_name(target), text);
}

std::string translate(std::string_view text, Language target, Backend& backend) {
  GenerationRequest request;
  request.prompt = translation_prompt(text, target);
  request.max_new_tokens = 512;
  const Completion c = generate(request, backend);
  std::string out(trim(c.text));
  if (out.empty()) throw BackendError("empty translation from backend '" + backend.id() + "'");
  return out;
}

std::string translate(std::string_view text, std::string_view target_code, Backend& backend) {
  return translate(text, require_language(target_code), backend);
}

}  // namespace xql
