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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xql/backend.hpp"
#include "xql/corpus.hpp"
#include "xql/embedding.hpp"
#include "xql/language.hpp"
#include "xql/tokenizer.hpp"

namespace xql {

enum class Task { kParse, kIntent, kExtraction, kSimilarity, kTranslate, kStats };

std::string_view to_string(Task task);
/// Accepts "parse" or "parse_eval" and so on.
std::optional<Task> parse_task(std::string_view text);

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;

/// Reads the process environment.
std::optional<std::string> process_env(std::string_view name);

/// Replaces every `${NAME}` with the variable's value. An unset variable is
/// a ConfigError.
std::string interpolate_env(std::string_view text, const EnvLookup& env = process_env);

struct RunConfig {
  Task task = Task::kParse;
  std::filesystem::path data_dir;  // registry/, prompts/, aliases.json
  std::filesystem::path dataset;   // directory or file
  std::optional<DatasetFormat> dataset_format;  // default follows the task
  std::optional<std::filesystem::path> train_dataset;  // defaults to `dataset`
  std::string train_split = "train";
  std::string test_split = "test";
  std::vector<Language> languages = {Language::kEN};
  std::vector<std::string> methods;  // strategies or approaches; empty = all for the task

  std::string backend = "none";  // "none", "scripted:<file>", "http"
  std::string backend_url;
  std::string backend_model;
  std::string backend_key_env = "XQL_API_KEY";
  bool logit_bias = false;
  std::optional<std::filesystem::path> tokenizer;  // default: mock vocabulary

  std::string embed = "mock";  // "mock" or "http"
  std::string embed_url;
  std::string embed_model;
  std::string embed_key_env = "XQL_EMBED_KEY";
  std::optional<std::filesystem::path> embed_cache;

  std::size_t shots = 0;  // 0 = the task's default
  std::size_t k = 3;
  std::uint64_t seed = 17;
  std::size_t parallelism = 4;
  std::filesystem::path out_dir;  // empty = no run directory

  /// String values may use `${ENV}` references; they are expanded before
  /// the fields are read.
  static RunConfig from_json(const nlohmann::json& j, const EnvLookup& env = process_env);
  static RunConfig load(const std::filesystem::path& path, const EnvLookup& env = process_env);
  nlohmann::json to_json() const;

  /// Methods after defaulting: every strategy, approach, or "fewshot".
  std::vector<std::string> effective_methods() const;

  /// Throws ConfigError for methods that do not belong to the task, an
  /// empty language list, or zero parallelism.
  void validate() const;

  DatasetFormat format() const;
  std::filesystem::path registry_path() const;
  std::filesystem::path prompts_dir() const;
  std::filesystem::path aliases_path() const;
};

/// One grid entry. correct + incorrect + failed == total; failed counts
/// questions without a prediction (including hard errors), and both
/// incorrect and failed count against the score.
struct ReportCell {
  Language language = Language::kEN;
  std::string method;
  std::string model_id;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t failed = 0;
  std::size_t hard_errors = 0;  // transport or backend exceptions
  double score = 0;             // percent
  double failure_rate = 0;      // percent of total
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  static ReportCell from_json(const nlohmann::json& j);
};

struct EvalReport {
  Task task = Task::kParse;
  std::string metric = "micro_f1";
  std::vector<ReportCell> cells;
  nlohmann::json metadata = nlohmann::json::object();

  const ReportCell* find(Language language, std::string_view method) const;
  std::size_t hard_errors() const;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

enum class ReportFormat { kJson, kCsv, kMarkdown };

std::optional<ReportFormat> parse_report_format(std::string_view text);
std::string render_report(const EvalReport& report, ReportFormat format);
void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path);

/// Backend, embedding provider, and tokenizer for a run. Tests build one
/// directly; the CLI builds one from the config.
struct EvalEnvironment {
  std::shared_ptr<const Tokenizer> tokenizer;
  std::shared_ptr<Backend> backend;  // null when only NN runs
  std::shared_ptr<EmbeddingProvider> provider;

  static EvalEnvironment from_config(const RunConfig& config);
};

/// Mock tokenizer over the bundled CoXQL and Compass registries.
std::shared_ptr<const Tokenizer> default_tokenizer(const std::filesystem::path& data_dir);

/// Per-question traces go to `trace_dir/<lang>-<method>.jsonl` when given.
EvalReport run_parse_eval(const RunConfig& config, EvalEnvironment& env,
                          const std::optional<std::filesystem::path>& trace_dir = {});
EvalReport run_intent_eval(const RunConfig& config, EvalEnvironment& env,
                           const std::optional<std::filesystem::path>& trace_dir = {});
EvalReport run_extraction_eval(const RunConfig& config, EvalEnvironment& env,
                               const std::optional<std::filesystem::path>& trace_dir = {});
/// Mean cosine between English records and their translations, per
/// language and split.
EvalReport run_similarity_report(const RunConfig& config, EvalEnvironment& env);

struct TranslationSummary {
  std::vector<std::filesystem::path> written;
  std::size_t translated = 0;
  std::size_t dropped = 0;  // records whose containment never held
  nlohmann::json to_json() const;
};

/// Translates the English records of every split into each non-English
/// configured language and writes `{dataset}.{split}.{lang}.json` files to
/// `out`.
TranslationSummary run_translation(const RunConfig& config, EvalEnvironment& env,
                                   const std::filesystem::path& out);

struct RunResult {
  EvalReport report;
  std::optional<std::filesystem::path> run_dir;
};

/// Runs an evaluation task. With `out_dir` set, writes
/// `out_dir/<timestamp>-<task>/` holding config.json, traces/, and
/// report.{json,csv,md}.
RunResult run_evaluation(const RunConfig& config, EvalEnvironment& env);

}  // namespace xql
