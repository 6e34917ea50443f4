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
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "xql/backend.hpp"
#include "xql/extraction.hpp"
#include "xql/language.hpp"
#include "xql/registry.hpp"

namespace xql {

struct CoxqlRecord {
  std::string question;
  std::string parse;
  Language language = Language::kEN;

  bool operator==(const CoxqlRecord&) const = default;
};

enum class DatasetFormat { kCoxql, kCompass };

std::string_view to_string(DatasetFormat format);
std::optional<DatasetFormat> parse_dataset_format(std::string_view text);

/// Renames file keys to the canonical record keys, e.g. {"question": "text"}
/// reads the question from "text".
struct FieldMap {
  std::map<std::string, std::string> file_key;  // canonical -> key in file

  const std::string& key(const std::string& canonical) const;
  static FieldMap from_json(const nlohmann::json& j);
};

struct ValidationIssue {
  std::string file;
  std::size_t index = 0;  // record position within the file
  std::string field;
  std::string rule;  // "schema", "gold_parse", "operation", "language", "containment"
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  std::size_t records_checked = 0;

  bool ok() const { return issues.empty(); }
  nlohmann::json to_json() const;
};

/// Splits keyed by name ("train", "test"); every language of a split is in
/// the same list.
struct DatasetBundle {
  std::string name;
  DatasetFormat format = DatasetFormat::kCoxql;
  std::map<std::string, std::vector<CoxqlRecord>> coxql;
  std::map<std::string, std::vector<CompassRecord>> compass;
  ValidationReport report;

  std::size_t size(const std::string& split) const;
  std::vector<std::string> split_names() const;
};

struct LoadOptions {
  FieldMap fields;
  std::string dataset_name;  // file prefix; defaults to the format name
  std::vector<Language> languages;  // empty = all
  /// Strict loading throws on the first report with issues: SchemaError for
  /// missing or mistyped fields, CorruptDataError for gold labels that do
  /// not parse or custom inputs not contained in their question.
  bool strict = true;
};

/// `path` is one file or a directory of `{dataset}.{split}.{lang}.json` files.
/// Records with issues are dropped from non-strict loads and listed in
/// the bundle's report.
DatasetBundle load_dataset(const std::filesystem::path& path, DatasetFormat format,
                           const OperationRegistry& registry, const LoadOptions& options = {});

/// JSON array with sorted keys, two-space indent, trailing newline.
void save_records(const std::filesystem::path& path, std::span<const CoxqlRecord> records);
void save_records(const std::filesystem::path& path, std::span<const CompassRecord> records);
nlohmann::json to_json(const CoxqlRecord& record);
nlohmann::json to_json(const CompassRecord& record);

inline constexpr std::string_view kMixAlgorithm = "mt19937_64/fisher-yates-rejection/v1";

struct MixSpec {
  Language target_language = Language::kDE;
  int proportion = 100;  // percent; one of 10, 25, 50, 75, 100
  std::uint64_t seed = 0;
};

/// floor(proportion * n / 100).
std::size_t mix_sample_size(std::size_t target_size, int proportion);

/// Uniform integer in [0, bound) by rejection sampling on raw 64-bit draws.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);

/// First `k` positions of a seeded partial Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng, std::size_t n,
                                                    std::size_t k);

template <class Record>
std::vector<Record> build_multilingual_mix(std::span<const Record> english,
                                           std::span<const Record> target, const MixSpec& spec) {
  const std::size_t k = mix_sample_size(target.size(), spec.proportion);
  std::mt19937_64 rng(spec.seed);
  std::vector<Record> mix(english.begin(), english.end());
  for (std::size_t i : sample_without_replacement(rng, target.size(), k)) mix.push_back(target[i]);
  for (std::size_t i = mix.size(); i > 1; --i) {
    std::swap(mix[i - 1], mix[bounded_draw(rng, i)]);
  }
  return mix;
}

/// Joint question/custom-input translation prompt for Compass records.
/// Attempts after the first add a reminder line so each retry is a new
/// prompt.
std::string compass_translation_prompt(const CompassRecord& record, Language target,
                                       int attempt = 1);

struct CompassTranslation {
  std::optional<CompassRecord> record;  // set when containment held
  int attempts = 0;
  std::vector<std::string> raw_outputs;
  std::string failure;  // why the last attempt was rejected
};

inline constexpr int kTranslationRetryCap = 5;

CompassTranslation translate_record(const CompassRecord& record, Language target,
                                    Backend& backend, int max_attempts = kTranslationRetryCap);

/// Translates the question only; the gold parse is copied unchanged.
CoxqlRecord translate_record(const CoxqlRecord& record, Language target, Backend& backend);

/// Counts per split, operation (main intent for CoXQL), and language.
struct DatasetStats {
  std::map<std::string, std::map<std::string, std::map<Language, std::size_t>>> counts;

  std::size_t total(const std::string& split) const;
  nlohmann::json to_json() const;
  std::string to_markdown() const;
};

DatasetStats dataset_stats(const DatasetBundle& bundle, const OperationRegistry& registry);

}  // namespace xql
