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

#include "xql/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "xql/error.hpp"
#include "xql/generation.hpp"
#include "xql/query.hpp"
#include "xql/text.hpp"

namespace xql {
namespace {

using nlohmann::json;

struct FileInfo {
  std::string dataset;
  std::string split = "all";
  std::optional<Language> language;
};

FileInfo file_info(const std::filesystem::path& path) {
  FileInfo info;
  const std::string name = path.filename().string();
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t dot = name.find('.'); dot != std::string::npos; dot = name.find('.', start)) {
    parts.push_back(name.substr(start, dot - start));
    start = dot + 1;
  }
  parts.push_back(name.substr(start));
  if (parts.size() == 4 && parts[3] == "json") {
    info.dataset = parts[0];
    info.split = parts[1];
    info.language = parse_language(parts[2]);
  } else {
    info.dataset = path.stem().string();
  }
  return info;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

class RecordReader {
 public:
  RecordReader(const json& record, const FieldMap& fields, std::string file, std::size_t index,
               ValidationReport& report)
      : record_(record), fields_(fields), file_(std::move(file)), index_(index), report_(report) {}

  std::optional<std::string> text(const std::string& canonical) {
    const std::string& key = fields_.key(canonical);
    auto it = record_.find(key);
    if (it == record_.end()) {
      issue(canonical, "schema", "missing field '" + key + "'");
      return std::nullopt;
    }
    if (!it->is_string()) {
      issue(canonical, "schema", "field '" + key + "' must be a string");
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  std::optional<Language> language(const std::optional<Language>& from_file) {
    const std::string& key = fields_.key("language");
    auto it = record_.find(key);
    if (it == record_.end()) {
      if (from_file) return from_file;
      issue("language", "schema", "missing field '" + key + "'");
      return std::nullopt;
    }
    if (!it->is_string()) {
      issue("language", "schema", "field '" + key + "' must be a string");
      return std::nullopt;
    }
    auto lang = parse_language(it->get<std::string>());
    if (!lang) {
      issue("language", "language", "unsupported language '" + it->get<std::string>() + "'");
      return std::nullopt;
    }
    if (from_file && *from_file != *lang) {
      issue("language", "language",
            "record language " + std::string(code(*lang)) + " differs from file language " +
                std::string(code(*from_file)));
      return std::nullopt;
    }
    return lang;
  }

  void issue(std::string field, std::string rule, std::string message) {
    report_.issues.push_back({file_, index_, std::move(field), std::move(rule), std::move(message)});
    ok_ = false;
  }

  bool ok() const { return ok_; }

 private:
  const json& record_;
  const FieldMap& fields_;
  std::string file_;
  std::size_t index_;
  ValidationReport& report_;
  bool ok_ = true;
};

void load_file(const std::filesystem::path& path, const FileInfo& info, DatasetFormat format,
               const OperationRegistry& registry, const LoadOptions& options,
               DatasetBundle& bundle) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("dataset file " + path.string() + " is not valid JSON: " + e.what());
  }
  const std::string file = path.filename().string();
  if (!doc.is_array()) {
    bundle.report.issues.push_back({file, 0, "", "schema", "top level must be a JSON array"});
    return;
  }
  for (std::size_t i = 0; i < doc.size(); ++i) {
    ++bundle.report.records_checked;
    const json& rec = doc[i];
    RecordReader reader(rec, options.fields, file, i, bundle.report);
    if (!rec.is_object()) {
      reader.issue("", "schema", "record must be a JSON object");
      continue;
    }
    auto lang = reader.language(info.language);
    if (format == DatasetFormat::kCoxql) {
      auto question = reader.text("question");
      auto parse = reader.text("parse");
      if (parse) {
        auto tree = parse_label(*parse, registry);
        if (!tree) reader.issue("parse", "gold_parse", "gold parse does not parse: " + tree.error().message());
      }
      if (reader.ok()) bundle.coxql[info.split].push_back({*question, *parse, *lang});
    } else {
      auto question = reader.text("user_question");
      auto op = reader.text("operation_name");
      auto custom = reader.text("custom_input");
      if (op) {
        const OperationSpec* spec = registry.find(*op);
        if (spec == nullptr || spec->is_logic()) {
          reader.issue("operation_name", "operation", "unknown operation '" + *op + "'");
        }
      }
      if (question && custom && !validate_containment(*custom, *question)) {
        reader.issue("custom_input", "containment",
                     "custom_input is not contained in user_question");
      }
      if (reader.ok()) bundle.compass[info.split].push_back({*question, *op, *custom, *lang});
    }
  }
}

std::string strip_fences(std::string_view raw) {
  std::string_view s = trim(raw);
  const auto open = s.find('{');
  const auto close = s.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    return std::string(s);
  }
  return std::string(s.substr(open, close - open + 1));
}

}  // namespace

std::string_view to_string(DatasetFormat format) {
  return format == DatasetFormat::kCoxql ? "coxql" : "compass";
}

std::optional<DatasetFormat> parse_dataset_format(std::string_view text) {
  const std::string t = to_lower_ascii(text);
  if (t == "coxql" || t == "multicoxql") return DatasetFormat::kCoxql;
  if (t == "compass") return DatasetFormat::kCompass;
  return std::nullopt;
}

const std::string& FieldMap::key(const std::string& canonical) const {
  auto it = file_key.find(canonical);
  return it == file_key.end() ? canonical : it->second;
}

FieldMap FieldMap::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("field map must be a JSON object");
  FieldMap m;
  for (const auto& [k, v] : j.items()) m.file_key[k] = v.get<std::string>();
  return m;
}

json ValidationReport::to_json() const {
  json issues_json = json::array();
  for (const auto& i : issues) {
    issues_json.push_back({{"file", i.file},
                           {"index", i.index},
                           {"field", i.field},
                           {"rule", i.rule},
                           {"message", i.message}});
  }
  return {{"records_checked", records_checked}, {"ok", ok()}, {"issues", issues_json}};
}

std::size_t DatasetBundle::size(const std::string& split) const {
  if (auto it = coxql.find(split); it != coxql.end()) return it->second.size();
  if (auto it = compass.find(split); it != compass.end()) return it->second.size();
  return 0;
}

std::vector<std::string> DatasetBundle::split_names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : coxql) out.push_back(k);
  for (const auto& [k, v] : compass) out.push_back(k);
  return out;
}

DatasetBundle load_dataset(const std::filesystem::path& path, DatasetFormat format,
                           const OperationRegistry& registry, const LoadOptions& options) {
  DatasetBundle bundle;
  bundle.format = format;
  const std::string prefix =
      options.dataset_name.empty() ? std::string(to_string(format)) : options.dataset_name;
  bundle.name = prefix;
  auto wanted = [&](const FileInfo& info) {
    if (options.languages.empty() || !info.language) return true;
    return std::find(options.languages.begin(), options.languages.end(), *info.language) !=
           options.languages.end();
  };
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      const FileInfo info = file_info(entry.path());
      if (info.dataset == prefix && info.language && wanted(info)) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw ConfigError("no " + prefix + ".<split>.<lang>.json files in " + path.string());
    }
    for (const auto& f : files) load_file(f, file_info(f), format, registry, options, bundle);
  } else if (std::filesystem::exists(path)) {
    const FileInfo info = file_info(path);
    if (wanted(info)) load_file(path, info, format, registry, options, bundle);
  } else {
    throw ConfigError("dataset path not found: " + path.string());
  }
  if (options.strict && !bundle.report.ok()) {
    const auto& first = bundle.report.issues.front();
    const std::string msg = std::to_string(bundle.report.issues.size()) +
                            " validation issue(s); first: " + first.file + " record " +
                            std::to_string(first.index) + " [" + first.field + "]: " + first.message;
    const bool schema = std::any_of(bundle.report.issues.begin(), bundle.report.issues.end(),
                                    [](const ValidationIssue& i) { return i.rule == "schema"; });
    if (schema) throw SchemaError(msg);
    throw CorruptDataError(msg);
  }
  return bundle;
}

json to_json(const CoxqlRecord& r) {
  return {{"question", r.question}, {"parse", r.parse}, {"language", code(r.language)}};
}

json to_json(const CompassRecord& r) {
  return {{"user_question", r.user_question},
          {"operation_name", r.operation_name},
          {"custom_input", r.custom_input},
          {"language", code(r.language)}};
}

void save_records(const std::filesystem::path& path, std::span<const CoxqlRecord> records) {
  json doc = json::array();
  for (const auto& r : records) doc.push_back(to_json(r));
  write_json(path, doc);
}

void save_records(const std::filesystem::path& path, std::span<const CompassRecord> records) {
  json doc = json::array();
  for (const auto& r : records) doc.push_back(to_json(r));
  write_json(path, doc);
}

std::size_t mix_sample_size(std::size_t target_size, int proportion) {
  static constexpr int kAllowed[] = {10, 25, 50, 75, 100};
  if (std::find(std::begin(kAllowed), std::end(kAllowed), proportion) == std::end(kAllowed)) {
    throw std::invalid_argument("mix proportion must be one of 10, 25, 50, 75, 100 (got " +
                      std::to_string(proportion) + ")");
  }
  return target_size * static_cast<std::size_t>(proportion) / 100;
}

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("bounded_draw needs a positive bound");
  // Largest multiple of bound that fits; draws at or above it are rejected.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng, std::size_t n,
                                                    std::size_t k) {
  if (k > n) throw std::invalid_argument("cannot sample more items than available");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + bounded_draw(rng, n - i)]);
  }
  idx.resize(k);
  return idx;
}

std::string compass_translation_prompt(const CompassRecord& record, Language target,
                                       int attempt) {
  std::string prompt =
      "The uploaded JSON consists of three fields: user_question, operation_name, and "
      "custom_input. The custom_input field is derived from user_question and serves as a "
      "simplified version by discarding all redundant information. Your task is to translate "
      "both user_question and custom_input into " +
      std::string(display_name(target)) + " while keeping operation_name as '" +
      record.operation_name +
      "'. Note that after the translation, the translated custom_input must remain a part of "
      "the translated user_question.\n\n";
  prompt += json{{"user_question", record.user_question},
                 {"operation_name", record.operation_name},
                 {"custom_input", record.custom_input}}
                .dump(2);
  if (attempt > 1) {
    prompt += "\n\nAttempt " + std::to_string(attempt) +
              ": the previous translation did not keep custom_input inside user_question.";
  }
  return prompt;
}

CompassTranslation translate_record(const CompassRecord& record, Language target,
                                    Backend& backend, int max_attempts) {
  CompassTranslation out;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    out.attempts = attempt;
    GenerationRequest req;
    req.prompt = compass_translation_prompt(record, target, attempt);
    req.max_new_tokens = 1024;
    const Completion c = generate(req, backend);
    out.raw_outputs.push_back(c.text);
    json j;
    try {
      j = json::parse(strip_fences(c.text));
    } catch (const json::parse_error&) {
      out.failure = "response is not JSON";
      continue;
    }
    if (!j.is_object() || !j.contains("user_question") || !j.contains("custom_input") ||
        !j["user_question"].is_string() || !j["custom_input"].is_string()) {
      out.failure = "response lacks user_question/custom_input strings";
      continue;
    }
    if (j.contains("operation_name") && j["operation_name"] != record.operation_name) {
      out.failure = "operation_name was changed";
      continue;
    }
    CompassRecord translated{j["user_question"].get<std::string>(), record.operation_name,
                             j["custom_input"].get<std::string>(), target};
    if (trim(translated.custom_input).empty() ||
        !validate_containment(translated.custom_input, translated.user_question)) {
      out.failure = "translated custom_input is not contained in translated user_question";
      continue;
    }
    out.record = std::move(translated);
    out.failure.clear();
    return out;
  }
  return out;
}

CoxqlRecord translate_record(const CoxqlRecord& record, Language target, Backend& backend) {
  return {translate(record.question, target, backend), record.parse, target};
}

std::size_t DatasetStats::total(const std::string& split) const {
  std::size_t n = 0;
  if (auto it = counts.find(split); it != counts.end()) {
    for (const auto& [op, by_lang] : it->second) {
      for (const auto& [lang, c] : by_lang) n += c;
    }
  }
  return n;
}

json DatasetStats::to_json() const {
  json j = json::object();
  for (const auto& [split, ops] : counts) {
    json s = json::object();
    for (const auto& [op, by_lang] : ops) {
      json l = json::object();
      for (const auto& [lang, c] : by_lang) l[std::string(code(lang))] = c;
      s[op] = l;
    }
    j[split] = {{"operations", s}, {"total", total(split)}};
  }
  return j;
}

std::string DatasetStats::to_markdown() const {
  std::string out;
  for (const auto& [split, ops] : counts) {
    std::set<Language> present;
    for (const auto& [op, by_lang] : ops) {
      for (const auto& [lang, c] : by_lang) present.insert(lang);
    }
    out += "### " + split + "\n\n| operation |";
    for (Language l : kAllLanguages) {
      if (present.contains(l)) out += " " + std::string(code(l)) + " |";
    }
    out += " total |\n|---|";
    for (Language l : kAllLanguages) {
      if (present.contains(l)) out += "---:|";
    }
    out += "---:|\n";
    for (const auto& [op, by_lang] : ops) {
      std::size_t row = 0;
      out += "| " + op + " |";
      for (Language l : kAllLanguages) {
        if (!present.contains(l)) continue;
        auto it = by_lang.find(l);
        const std::size_t c = it == by_lang.end() ? 0 : it->second;
        row += c;
        out += " " + std::to_string(c) + " |";
      }
      out += " " + std::to_string(row) + " |\n";
    }
    out += "\n";
  }
  return out;
}

DatasetStats dataset_stats(const DatasetBundle& bundle, const OperationRegistry& registry) {
  DatasetStats stats;
  for (const auto& [split, records] : bundle.coxql) {
    auto& table = stats.counts[split];
    for (const auto& r : records) {
      auto tree = parse_label(r.parse, registry);
      if (!tree) throw CorruptDataError("unparseable gold in stats: " + r.parse);
      ++table[main_intent(*tree, registry)][r.language];
    }
  }
  for (const auto& [split, records] : bundle.compass) {
    auto& table = stats.counts[split];
    for (const auto& r : records) ++table[r.operation_name][r.language];
  }
  return stats;
}

}  // namespace xql
