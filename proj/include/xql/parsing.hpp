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

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xql/backend.hpp"
#include "xql/embedding.hpp"
#include "xql/grammar.hpp"
#include "xql/prompts.hpp"
#include "xql/query.hpp"
#include "xql/tokenizer.hpp"

namespace xql {

enum class Strategy { kNN, kGD, kMP, kMPPlus, kGMP };

std::string_view to_string(Strategy strategy);
/// "nn", "gd", "mp", "mp_plus" (or "mp+"), "gmp".
std::optional<Strategy> parse_strategy(std::string_view text);

struct StageRecord {
  std::string name;
  std::string prompt;  // empty for stages without a backend call
  std::string raw_output;
  nlohmann::json derived;
};

struct ParseFailure {
  std::string kind;  // e.g. "UnknownOperation", "BudgetExhausted"
  std::string message;
};

struct ParsingTrace {
  Strategy strategy = Strategy::kNN;
  std::string question;
  std::vector<StageRecord> stages;
  std::optional<std::string> final_parse;  // canonical
  std::optional<ParseFailure> failure;

  nlohmann::json to_json() const;
};

struct TrainExample {
  std::string question;
  std::string parse;
};

struct DemonstrationSet {
  std::vector<TrainExample> entries;
  std::vector<std::size_t> source_indices;
};

struct ParsingOptions {
  std::size_t gd_shots = 20;
  std::size_t mp_stage1_shots = 10;
  std::size_t mp_stage2_shots = 5;
  std::size_t gmp_k = 3;
  std::size_t gmp_demos_per_candidate = 3;
  std::size_t gmp_stage4_shots = 10;
  int max_new_tokens = 64;
};

/// Everything the strategies share: registry, grammars, prompts, and the
/// embedded training split with its intent centroids. Immutable after
/// construction and safe to share across threads.
class ParsingContext {
 public:
  /// Throws CorruptDataError when a training parse does not parse, and
  /// std::invalid_argument for an empty training split.
  ParsingContext(std::shared_ptr<const OperationRegistry> registry,
                 std::shared_ptr<const Tokenizer> tokenizer, PromptLibrary prompts,
                 std::vector<TrainExample> train, EmbeddingProvider& provider,
                 ParsingOptions options = {});

  const OperationRegistry& registry() const { return *registry_; }
  const Tokenizer& tokenizer() const { return *tokenizer_; }
  const PromptLibrary& prompts() const { return prompts_; }
  const ParsingOptions& options() const { return options_; }
  const std::shared_ptr<const Grammar>& full_grammar() const { return full_grammar_; }
  /// Throws std::invalid_argument for a name that is not an intent.
  const std::shared_ptr<const Grammar>& intent_grammar(const std::string& intent) const;
  const std::vector<TrainExample>& train() const { return train_; }
  /// Pool labelled with each example's main intent.
  const EmbeddedPool& pool() const { return pool_; }
  const std::vector<IntentCentroid>& centroids() const { return centroids_; }
  EmbeddingProvider& provider() const { return *provider_; }

  /// Most similar training examples, optionally restricted to intents.
  DemonstrationSet demonstrations(const EmbeddingVector& query, std::size_t shots,
                                  const std::optional<std::set<std::string>>& intents = {}) const;

  /// "name: description" lines for every intent.
  std::string operation_listing() const;

 private:
  std::shared_ptr<const OperationRegistry> registry_;
  std::shared_ptr<const Tokenizer> tokenizer_;
  PromptLibrary prompts_;
  ParsingOptions options_;
  std::shared_ptr<const Grammar> full_grammar_;
  std::map<std::string, std::shared_ptr<const Grammar>> intent_grammars_;
  std::vector<TrainExample> train_;
  EmbeddedPool pool_;
  std::vector<IntentCentroid> centroids_;
  EmbeddingProvider* provider_;
};

/// Parsing outcomes are values. Backend errors (transport, fixture miss)
/// still propagate as exceptions.
ParsingTrace parse_nn(const std::string& question, const ParsingContext& ctx);
ParsingTrace parse_gd(const std::string& question, const ParsingContext& ctx, Backend& backend);
ParsingTrace parse_mp(const std::string& question, const ParsingContext& ctx, Backend& backend);
ParsingTrace parse_mp_plus(const std::string& question, const ParsingContext& ctx,
                           Backend& backend);
ParsingTrace parse_gmp(const std::string& question, const ParsingContext& ctx, Backend& backend);

ParsingTrace run_strategy(Strategy strategy, const std::string& question,
                          const ParsingContext& ctx, Backend* backend);

}  // namespace xql
