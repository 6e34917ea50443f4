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

#include "xql/eval.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "xql/error.hpp"
#include "xql/extraction.hpp"
#include "xql/http_backend.hpp"
#include "xql/metrics.hpp"
#include "xql/parsing.hpp"
#include "xql/prompts.hpp"
#include "xql/query.hpp"
#include "xql/scripted_backend.hpp"
#include "xql/text.hpp"

namespace xql {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::size_t kIntentShots = 10;
constexpr std::size_t kExtractionShots = 5;

json expand(const json& j, const EnvLookup& env) {
  if (j.is_string()) return interpolate_env(j.get<std::string>(), env);
  if (j.is_array() || j.is_object()) {
    json out = j;
    for (auto& [key, value] : out.items()) value = expand(value, env);
    return out;
  }
  return j;
}

std::string lower_code(Language lang) { return to_lower_ascii(code(lang)); }

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

void finish_cell(ReportCell& cell) {
  cell.incorrect = cell.total - cell.correct - cell.failed;
  cell.score = cell.total == 0 ? 0.0 : round2(100.0 * static_cast<double>(cell.correct) /
                                               static_cast<double>(cell.total));
  cell.failure_rate = cell.total == 0 ? 0.0 : round2(100.0 * static_cast<double>(cell.failed) /
                                                      static_cast<double>(cell.total));
}

void write_traces(const std::optional<fs::path>& dir, const ReportCell& cell,
                  const std::vector<json>& lines) {
  if (!dir) return;
  fs::create_directories(*dir);
  std::ofstream out(*dir / (lower_code(cell.language) + "-" + cell.method + ".jsonl"),
                    std::ios::binary);
  for (const auto& line : lines) out << line.dump() << '\n';
}

std::vector<Language> ordered(const std::vector<Language>& langs) {
  std::vector<Language> out;
  for (Language l : kAllLanguages) {
    if (std::find(langs.begin(), langs.end(), l) != langs.end()) out.push_back(l);
  }
  return out;
}

DatasetBundle load_for(const RunConfig& config, const fs::path& path,
                       const OperationRegistry& registry) {
  LoadOptions opts;
  opts.languages = config.languages;
  if (std::find(opts.languages.begin(), opts.languages.end(), Language::kEN) ==
      opts.languages.end()) {
    opts.languages.push_back(Language::kEN);
  }
  return load_dataset(path, config.format(), registry, opts);
}

template <class Record>
std::vector<Record> of_language(const std::map<std::string, std::vector<Record>>& splits,
                                const std::string& split, Language lang) {
  std::vector<Record> out;
  auto it = splits.find(split);
  if (it == splits.end()) return out;
  for (const auto& r : it->second) {
    if (r.language == lang) out.push_back(r);
  }
  return out;
}

/// Training records for `lang`, falling back to English when the split has
/// none in that language.
template <class Record>
std::vector<Record> training_records(const std::map<std::string, std::vector<Record>>& splits,
                                     const std::string& split, Language lang, bool& fell_back) {
  auto out = of_language(splits, split, lang);
  fell_back = out.empty() && lang != Language::kEN;
  if (fell_back) out = of_language(splits, split, Language::kEN);
  if (out.empty()) {
    throw ConfigError("no training records in split '" + split + "' for " +
                      std::string(code(lang)));
  }
  return out;
}

json base_metadata(const RunConfig& config, const EvalEnvironment& env,
                   const PromptLibrary* prompts) {
  json meta = {{"task", to_string(config.task)},
               {"seed", config.seed},
               {"mix_algorithm", kMixAlgorithm},
               {"backend_id", env.backend ? env.backend->id() : "none"},
               {"embedding_id", env.provider ? env.provider->id() : "none"},
               {"variance", "single greedy run per cell; no variance estimate"},
               {"config", config.to_json()}};
  if (prompts != nullptr) meta["prompt_version"] = prompts->version();
  return meta;
}

std::string now_iso() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}",
                     fmt::gmtime(std::chrono::system_clock::to_time_t(
                         std::chrono::system_clock::now())));
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string markdown_grid(const EvalReport& report, const std::string& title,
                          const std::function<std::string(const ReportCell&)>& value) {
  std::vector<std::pair<std::string, std::string>> rows;  // (model, method)
  for (const auto& c : report.cells) {
    std::pair<std::string, std::string> key{c.model_id, c.method};
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
  }
  std::string out = "### " + title + "\n\n| model | method |";
  for (Language l : kAllLanguages) out += " " + std::string(code(l)) + " |";
  out += "\n|---|---|";
  for (std::size_t i = 0; i < kAllLanguages.size(); ++i) out += "---:|";
  out += "\n";
  for (const auto& [model, method] : rows) {
    out += "| " + model + " | " + method + " |";
    for (Language l : kAllLanguages) {
      const ReportCell* cell = nullptr;
      for (const auto& c : report.cells) {
        if (c.language == l && c.method == method && c.model_id == model) cell = &c;
      }
      const std::string shown = !cell ? "-" : cell->total == 0 ? "n/a" : value(*cell);
      out += " " + shown + " |";
    }
    out += "\n";
  }
  return out + "\n";
}

std::string pct(double v) { return fmt::format("{:.2f}", v); }

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::kParse: return "parse_eval";
    case Task::kIntent: return "intent_eval";
    case Task::kExtraction: return "extraction_eval";
    case Task::kSimilarity: return "similarity_report";
    case Task::kTranslate: return "translate";
    case Task::kStats: return "stats";
  }
  return "?";
}

std::optional<Task> parse_task(std::string_view text) {
  const std::string t = to_lower_ascii(text);
  if (t == "parse" || t == "parse_eval") return Task::kParse;
  if (t == "intent" || t == "intent_eval") return Task::kIntent;
  if (t == "extraction" || t == "extract" || t == "extraction_eval") return Task::kExtraction;
  if (t == "similarity" || t == "similarity_report") return Task::kSimilarity;
  if (t == "translate") return Task::kTranslate;
  if (t == "stats") return Task::kStats;
  return std::nullopt;
}

std::optional<std::string> process_env(std::string_view name) {
  const char* v = std::getenv(std::string(name).c_str());
  if (v == nullptr) return std::nullopt;
  return std::string(v);
}

std::string interpolate_env(std::string_view text, const EnvLookup& env) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("${", pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find('}', open + 2);
    if (close == std::string_view::npos) {
      throw ConfigError("unterminated ${ in config value: " + std::string(text));
    }
    out.append(text.substr(pos, open - pos));
    const std::string_view name = text.substr(open + 2, close - open - 2);
    auto value = env(name);
    if (!value) throw ConfigError("environment variable " + std::string(name) + " is not set");
    out += *value;
    pos = close + 1;
  }
  out.append(text.substr(pos));
  return out;
}

RunConfig RunConfig::from_json(const json& raw, const EnvLookup& env) {
  if (!raw.is_object()) throw ConfigError("run config must be a JSON object");
  const json j = expand(raw, env);
  RunConfig c;
  try {
    if (j.contains("task")) {
      auto t = parse_task(j["task"].get<std::string>());
      if (!t) throw ConfigError("unknown task '" + j["task"].get<std::string>() + "'");
      c.task = *t;
    }
    auto path_of = [&](const char* key, fs::path& into) {
      if (j.contains(key)) into = j[key].get<std::string>();
    };
    auto opt_path_of = [&](const char* key, std::optional<fs::path>& into) {
      if (j.contains(key) && !j[key].is_null()) into = fs::path(j[key].get<std::string>());
    };
    auto str_of = [&](const char* key, std::string& into) {
      if (j.contains(key)) into = j[key].get<std::string>();
    };
    auto size_of = [&](const char* key, std::size_t& into) {
      if (j.contains(key)) into = j[key].get<std::size_t>();
    };
    path_of("data_dir", c.data_dir);
    path_of("dataset", c.dataset);
    opt_path_of("train_dataset", c.train_dataset);
    if (j.contains("dataset_format")) {
      auto f = parse_dataset_format(j["dataset_format"].get<std::string>());
      if (!f) throw ConfigError("unknown dataset_format");
      c.dataset_format = f;
    }
    str_of("train_split", c.train_split);
    str_of("test_split", c.test_split);
    if (j.contains("languages")) {
      c.languages.clear();
      for (const auto& l : j["languages"]) c.languages.push_back(require_language(l.get<std::string>()));
    }
    if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
    str_of("backend", c.backend);
    str_of("backend_url", c.backend_url);
    str_of("backend_model", c.backend_model);
    str_of("backend_key_env", c.backend_key_env);
    if (j.contains("logit_bias")) c.logit_bias = j["logit_bias"].get<bool>();
    opt_path_of("tokenizer", c.tokenizer);
    str_of("embed", c.embed);
    str_of("embed_url", c.embed_url);
    str_of("embed_model", c.embed_model);
    str_of("embed_key_env", c.embed_key_env);
    opt_path_of("embed_cache", c.embed_cache);
    size_of("shots", c.shots);
    size_of("k", c.k);
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    size_of("parallelism", c.parallelism);
    path_of("out_dir", c.out_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config " + path.string());
  try {
    return from_json(json::parse(in), env);
  } catch (const json::parse_error& e) {
    throw ConfigError("run config " + path.string() + " is not valid JSON: " + e.what());
  }
}

json RunConfig::to_json() const {
  json langs = json::array();
  for (Language l : languages) langs.push_back(code(l));
  json j = {{"task", to_string(task)},
            {"data_dir", data_dir.string()},
            {"dataset", dataset.string()},
            {"dataset_format", xql::to_string(format())},
            {"train_split", train_split},
            {"test_split", test_split},
            {"languages", langs},
            {"methods", effective_methods()},
            {"backend", backend},
            {"backend_url", backend_url},
            {"backend_model", backend_model},
            {"backend_key_env", backend_key_env},
            {"logit_bias", logit_bias},
            {"embed", embed},
            {"embed_url", embed_url},
            {"embed_model", embed_model},
            {"embed_key_env", embed_key_env},
            {"shots", shots},
            {"k", k},
            {"seed", seed},
            {"parallelism", parallelism},
            {"out_dir", out_dir.string()}};
  if (train_dataset) j["train_dataset"] = train_dataset->string();
  if (tokenizer) j["tokenizer"] = tokenizer->string();
  if (embed_cache) j["embed_cache"] = embed_cache->string();
  return j;
}

std::vector<std::string> RunConfig::effective_methods() const {
  if (!methods.empty()) {
    std::vector<std::string> out;
    for (const auto& m : methods) {
      if (task == Task::kParse) {
        auto s = parse_strategy(m);
        out.push_back(s ? std::string(xql::to_string(*s)) : m);
      } else if (task == Task::kExtraction) {
        auto a = parse_approach(m);
        out.push_back(a ? std::string(xql::to_string(*a)) : m);
      } else {
        out.push_back(m);
      }
    }
    return out;
  }
  switch (task) {
    case Task::kParse: {
      std::vector<std::string> out;
      for (Strategy s : {Strategy::kNN, Strategy::kGD, Strategy::kMP, Strategy::kMPPlus,
                         Strategy::kGMP}) {
        out.emplace_back(xql::to_string(s));
      }
      return out;
    }
    case Task::kExtraction: {
      std::vector<std::string> out;
      for (Approach a : kAllApproaches) out.emplace_back(xql::to_string(a));
      return out;
    }
    case Task::kIntent: return {"fewshot"};
    default: return {};
  }
}

void RunConfig::validate() const {
  if (languages.empty()) throw ConfigError("no languages configured");
  if (parallelism == 0) throw ConfigError("parallelism must be at least 1");
  for (const auto& m : methods) {
    const bool ok = task == Task::kParse        ? parse_strategy(m).has_value()
                    : task == Task::kExtraction ? parse_approach(m).has_value()
                    : task == Task::kIntent     ? m == "fewshot"
                                                : false;
    if (!ok) throw ConfigError("method '" + m + "' is not valid for task " + std::string(to_string(task)));
  }
  if (task == Task::kParse) {
    for (const auto& m : effective_methods()) {
      if (parse_strategy(m) != Strategy::kNN && backend == "none") {
        throw ConfigError("strategy " + m + " needs a backend");
      }
    }
  }
  if ((task == Task::kIntent || task == Task::kExtraction || task == Task::kTranslate) &&
      backend == "none") {
    throw ConfigError("task " + std::string(to_string(task)) + " needs a backend");
  }
}

DatasetFormat RunConfig::format() const {
  if (dataset_format) return *dataset_format;
  return task == Task::kIntent || task == Task::kExtraction ? DatasetFormat::kCompass
                                                           : DatasetFormat::kCoxql;
}

fs::path RunConfig::registry_path() const {
  return data_dir / "registry" / (std::string(xql::to_string(format())) + ".registry.json");
}

fs::path RunConfig::prompts_dir() const { return data_dir / "prompts"; }

fs::path RunConfig::aliases_path() const { return data_dir / "aliases.json"; }

json ReportCell::to_json() const {
  return {{"language", code(language)}, {"method", method},     {"model_id", model_id},
          {"total", total},             {"correct", correct},   {"incorrect", incorrect},
          {"failed", failed},           {"hard_errors", hard_errors},
          {"score", score},             {"failure_rate", failure_rate},
          {"extra", extra}};
}

ReportCell ReportCell::from_json(const json& j) {
  ReportCell c;
  c.language = require_language(j.at("language").get<std::string>());
  c.method = j.at("method").get<std::string>();
  c.model_id = j.at("model_id").get<std::string>();
  c.total = j.at("total").get<std::size_t>();
  c.correct = j.at("correct").get<std::size_t>();
  c.incorrect = j.at("incorrect").get<std::size_t>();
  c.failed = j.at("failed").get<std::size_t>();
  c.hard_errors = j.value("hard_errors", std::size_t{0});
  c.score = j.at("score").get<double>();
  c.failure_rate = j.at("failure_rate").get<double>();
  c.extra = j.value("extra", json::object());
  return c;
}

const ReportCell* EvalReport::find(Language language, std::string_view method) const {
  for (const auto& c : cells) {
    if (c.language == language && c.method == method) return &c;
  }
  return nullptr;
}

std::size_t EvalReport::hard_errors() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.hard_errors;
  return n;
}

json EvalReport::to_json() const {
  json cells_json = json::array();
  for (const auto& c : cells) cells_json.push_back(c.to_json());
  return {{"task", to_string(task)}, {"metric", metric}, {"cells", cells_json},
          {"metadata", metadata}};
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  auto t = parse_task(j.at("task").get<std::string>());
  if (!t) throw SchemaError("report has an unknown task");
  r.task = *t;
  r.metric = j.value("metric", std::string("micro_f1"));
  for (const auto& c : j.at("cells")) r.cells.push_back(ReportCell::from_json(c));
  r.metadata = j.value("metadata", json::object());
  return r;
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  const std::string t = to_lower_ascii(text);
  if (t == "json") return ReportFormat::kJson;
  if (t == "csv") return ReportFormat::kCsv;
  if (t == "markdown" || t == "md") return ReportFormat::kMarkdown;
  return std::nullopt;
}

std::string render_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson: return report.to_json().dump(2) + "\n";
    case ReportFormat::kCsv: {
      std::string out =
          "task,language,method,model_id,total,correct,incorrect,failed,hard_errors,score,"
          "failure_rate,extra\n";
      for (const auto& c : report.cells) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(report.task),
                           code(c.language), csv_field(c.method), csv_field(c.model_id), c.total,
                           c.correct, c.incorrect, c.failed, c.hard_errors, pct(c.score),
                           pct(c.failure_rate), csv_field(c.extra.dump()));
      }
      return out;
    }
    case ReportFormat::kMarkdown: {
      std::string out = "## " + std::string(to_string(report.task)) + " (" + report.metric +
                        ", %)\n\n";
      out += markdown_grid(report, report.metric, [](const ReportCell& c) { return pct(c.score); });
      if (report.task != Task::kSimilarity) {
        out += markdown_grid(report, "failure rate",
                             [](const ReportCell& c) { return pct(c.failure_rate); });
      }
      if (report.task == Task::kExtraction) {
        out += markdown_grid(report, "char overlap F1", [](const ReportCell& c) {
          return pct(c.extra.value("char_overlap_f1", 0.0));
        });
      }
      return out;
    }
  }
  return {};
}

void emit_report(const EvalReport& report, ReportFormat format, const fs::path& path) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report " + path.string());
  out << render_report(report, format);
}

std::shared_ptr<const Tokenizer> default_tokenizer(const fs::path& data_dir) {
  const auto coxql = OperationRegistry::load(data_dir / "registry" / "coxql.registry.json");
  const auto compass = OperationRegistry::load(data_dir / "registry" / "compass.registry.json");
  const OperationRegistry* regs[] = {&coxql, &compass};
  return std::make_shared<const Tokenizer>(make_mock_tokenizer(regs));
}

EvalEnvironment EvalEnvironment::from_config(const RunConfig& config) {
  EvalEnvironment env;
  env.tokenizer = config.tokenizer
                      ? std::make_shared<const Tokenizer>(Tokenizer::load(*config.tokenizer))
                      : default_tokenizer(config.data_dir);
  if (config.backend.rfind("scripted:", 0) == 0) {
    env.backend = std::make_shared<ScriptedBackend>(
        ScriptedBackend::load(config.backend.substr(9), env.tokenizer));
  } else if (config.backend == "http") {
    HttpBackendConfig http;
    http.url = config.backend_url;
    http.model = config.backend_model;
    http.api_key_env = config.backend_key_env;
    http.logit_bias = config.logit_bias;
    env.backend = std::make_shared<HttpBackend>(http);
  } else if (config.backend != "none") {
    throw ConfigError("unknown backend '" + config.backend +
                      "' (expected none, http, or scripted:<file>)");
  }
  std::shared_ptr<EmbeddingProvider> provider;
  if (config.embed == "mock") {
    provider = std::make_shared<MockEmbeddingProvider>();
  } else if (config.embed == "http") {
    HttpEmbeddingConfig http;
    http.url = config.embed_url;
    http.model = config.embed_model;
    http.api_key_env = config.embed_key_env;
    provider = std::make_shared<HttpEmbeddingProvider>(http);
  } else {
    throw ConfigError("unknown embedding provider '" + config.embed + "' (expected mock or http)");
  }
  if (config.embed_cache) {
    provider = std::make_shared<CachedEmbeddingProvider>(provider, *config.embed_cache);
  }
  env.provider = provider;
  return env;
}

EvalReport run_parse_eval(const RunConfig& config, EvalEnvironment& env,
                          const std::optional<fs::path>& trace_dir) {
  config.validate();
  auto registry = std::make_shared<const OperationRegistry>(OperationRegistry::load(config.registry_path()));
  const PromptLibrary prompts = PromptLibrary::load(config.prompts_dir());
  const DatasetBundle test = load_for(config, config.dataset, *registry);
  const DatasetBundle train = config.train_dataset ? load_for(config, *config.train_dataset, *registry) : test;

  ParsingOptions opts;
  if (config.shots > 0) opts.gd_shots = config.shots;
  opts.gmp_k = config.k;

  EvalReport report;
  report.task = Task::kParse;
  report.metadata = base_metadata(config, env, &prompts);
  json fallbacks = json::array();

  for (Language lang : ordered(config.languages)) {
    bool fell_back = false;
    std::vector<TrainExample> examples;
    for (const auto& r : training_records(train.coxql, config.train_split, lang, fell_back)) {
      examples.push_back({r.question, r.parse});
    }
    if (fell_back) fallbacks.push_back(code(lang));
    const ParsingContext ctx(registry, env.tokenizer, prompts, std::move(examples), *env.provider, opts);
    const auto questions = of_language(test.coxql, config.test_split, lang);

    for (const auto& method : config.effective_methods()) {
      const Strategy strategy = *parse_strategy(method);
      ReportCell cell;
      cell.language = lang;
      cell.method = method;
      cell.model_id = strategy == Strategy::kNN ? env.provider->id() : env.backend->id();
      cell.total = questions.size();
      std::vector<json> traces(questions.size());
      std::vector<int> outcome(questions.size());  // 1 correct, 0 incorrect, -1 failed, -2 hard error
      parallel_for(questions.size(), config.parallelism, [&](std::size_t i) {
        const auto& q = questions[i];
        json line = {{"index", i}, {"question", q.question}, {"gold", q.parse}};
        try {
          const ParsingTrace trace = run_strategy(strategy, q.question, ctx, env.backend.get());
          const bool correct = trace.final_parse && compare_parses(*trace.final_parse, q.parse, *registry);
          outcome[i] = !trace.final_parse ? -1 : correct ? 1 : 0;
          line["correct"] = correct;
          line["trace"] = trace.to_json();
        } catch (const std::exception& e) {
          outcome[i] = -2;
          line["correct"] = false;
          line["error"] = e.what();
        }
        traces[i] = std::move(line);
      });
      for (int o : outcome) {
        if (o == 1) ++cell.correct;
        if (o < 0) ++cell.failed;
        if (o == -2) ++cell.hard_errors;
      }
      finish_cell(cell);
      write_traces(trace_dir, cell, traces);
      report.cells.push_back(std::move(cell));
    }
  }
  report.metadata["train_language_fallback"] = fallbacks;
  report.metadata["prompt_templates"] = {"gd", "mp_stage1", "mp_stage2", "gmp_stage3", "gmp_stage4"};
  return report;
}

EvalReport run_intent_eval(const RunConfig& config, EvalEnvironment& env,
                           const std::optional<fs::path>& trace_dir) {
  config.validate();
  const auto registry = OperationRegistry::load(config.registry_path());
  const PromptLibrary prompts = PromptLibrary::load(config.prompts_dir());
  const AliasTable aliases = fs::exists(config.aliases_path()) ? AliasTable::load(config.aliases_path())
                                                                : AliasTable{};
  const DatasetBundle test = load_for(config, config.dataset, registry);
  const DatasetBundle train = config.train_dataset ? load_for(config, *config.train_dataset, registry) : test;
  const std::size_t shots = config.shots > 0 ? config.shots : kIntentShots;

  EvalReport report;
  report.task = Task::kIntent;
  report.metadata = base_metadata(config, env, &prompts);
  report.metadata["prompt_templates"] = {"compass_intent"};
  json fallbacks = json::array();

  for (Language lang : ordered(config.languages)) {
    bool fell_back = false;
    std::vector<LabeledText> labeled;
    for (const auto& r : training_records(train.compass, config.train_split, lang, fell_back)) {
      labeled.push_back({r.user_question, r.operation_name});
    }
    if (fell_back) fallbacks.push_back(code(lang));
    const EmbeddedPool pool = EmbeddedPool::build(std::move(labeled), *env.provider);
    const auto questions = of_language(test.compass, config.test_split, lang);
    const std::string lc = lower_code(lang);

    for (const auto& method : config.effective_methods()) {
      ReportCell cell;
      cell.language = lang;
      cell.method = method;
      cell.model_id = env.backend->id();
      cell.total = questions.size();
      std::vector<json> traces(questions.size());
      std::vector<int> outcome(questions.size());
      parallel_for(questions.size(), config.parallelism, [&](std::size_t i) {
        const auto& q = questions[i];
        json line = {{"index", i}, {"question", q.user_question}, {"gold", q.operation_name}};
        try {
          const auto c = classify_intent_fewshot(q.user_question, pool, *env.provider, *env.backend,
                                                 registry, aliases, prompts, lc, shots);
          const bool correct = c.intent && *c.intent == q.operation_name;
          outcome[i] = !c.intent ? -1 : correct ? 1 : 0;
          line["correct"] = correct;
          line["prompt"] = c.prompt;
          line["raw_output"] = c.raw_output;
          line["intent"] = c.intent ? json(*c.intent) : json(nullptr);
          line["demo_indices"] = c.demo_indices;
        } catch (const std::exception& e) {
          outcome[i] = -2;
          line["correct"] = false;
          line["error"] = e.what();
        }
        traces[i] = std::move(line);
      });
      for (int o : outcome) {
        if (o == 1) ++cell.correct;
        if (o < 0) ++cell.failed;
        if (o == -2) ++cell.hard_errors;
      }
      finish_cell(cell);
      write_traces(trace_dir, cell, traces);
      report.cells.push_back(std::move(cell));
    }
  }
  report.metadata["train_language_fallback"] = fallbacks;
  return report;
}

EvalReport run_extraction_eval(const RunConfig& config, EvalEnvironment& env,
                               const std::optional<fs::path>& trace_dir) {
  config.validate();
  const auto registry = OperationRegistry::load(config.registry_path());
  const PromptLibrary prompts = PromptLibrary::load(config.prompts_dir());
  const DatasetBundle test = load_for(config, config.dataset, registry);
  const DatasetBundle train = config.train_dataset ? load_for(config, *config.train_dataset, registry) : test;
  const std::size_t shots = config.shots > 0 ? config.shots : kExtractionShots;

  EvalReport report;
  report.task = Task::kExtraction;
  report.metadata = base_metadata(config, env, &prompts);
  json templates = json::array();
  for (const auto& m : config.effective_methods()) templates.push_back("extract_" + m);
  report.metadata["prompt_templates"] = templates;
  json fallbacks = json::array();

  for (Language lang : ordered(config.languages)) {
    bool fell_back = false;
    const auto train_records = training_records(train.compass, config.train_split, lang, fell_back);
    if (fell_back) fallbacks.push_back(code(lang));
    std::vector<LabeledText> labeled;
    for (const auto& r : train_records) labeled.push_back({r.user_question, r.operation_name});
    const EmbeddedPool pool = EmbeddedPool::build(std::move(labeled), *env.provider);
    const auto questions = of_language(test.compass, config.test_split, lang);
    const std::string lc = lower_code(lang);

    // Demonstrations depend only on the question, so every approach sees the same ones.
    std::vector<std::vector<ExtractionDemo>> demos(questions.size());
    for (std::size_t i = 0; i < questions.size(); ++i) {
      for (const auto& hit : topk_examples(env.provider->embed_one(questions[i].user_question), pool, shots)) {
        const auto& r = train_records[hit.example_ref];
        demos[i].push_back({r.user_question, r.custom_input});
      }
    }

    for (const auto& method : config.effective_methods()) {
      const Approach approach = *parse_approach(method);
      ReportCell cell;
      cell.language = lang;
      cell.method = method;
      cell.model_id = env.backend->id();
      cell.total = questions.size();
      std::vector<ExtractionResult> results(questions.size());
      std::vector<json> traces(questions.size());
      std::vector<bool> hard(questions.size(), false);
      parallel_for(questions.size(), config.parallelism, [&](std::size_t i) {
        const auto& q = questions[i];
        json line = {{"index", i}, {"question", q.user_question}, {"gold", q.custom_input}};
        try {
          results[i] = extract_custom_input(approach, q.user_question, demos[i], prompts,
                                            *env.backend, lc);
          line["result"] = results[i].to_json();
        } catch (const std::exception& e) {
          results[i] = ExtractionResult{};
          results[i].approach = approach;
          hard[i] = true;
          line["error"] = e.what();
        }
        traces[i] = std::move(line);
      });
      const ExtractionScore score = score_extraction(results, questions);
      cell.correct = score.correct;
      for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].extracted) ++cell.failed;
        if (hard[i]) ++cell.hard_errors;
        traces[i]["correct"] = false;
      }
      finish_cell(cell);
      cell.score = round2(score.micro_f1);
      cell.extra = {{"char_overlap_f1", round2(score.char_overlap_f1)},
                    {"decode_errors", score.decode_errors},
                    {"not_contained", score.not_contained}};
      // Per-question correctness, recomputed one at a time for the traces.
      for (std::size_t i = 0; i < results.size(); ++i) {
        const ExtractionScore one = score_extraction(std::span(&results[i], 1), std::span(&questions[i], 1));
        traces[i]["correct"] = one.correct == 1;
      }
      write_traces(trace_dir, cell, traces);
      report.cells.push_back(std::move(cell));
    }
  }
  report.metadata["train_language_fallback"] = fallbacks;
  return report;
}

namespace {

template <class Record>
std::vector<std::pair<std::string, std::string>> align(const std::vector<Record>& en,
                                                        const std::vector<Record>& target,
                                                        auto label, auto text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  if (en.size() == target.size()) {
    for (std::size_t i = 0; i < en.size(); ++i) pairs.emplace_back(text(en[i]), text(target[i]));
    return pairs;
  }
  std::vector<bool> used(en.size(), false);
  for (const auto& t : target) {
    for (std::size_t i = 0; i < en.size(); ++i) {
      if (!used[i] && label(en[i]) == label(t)) {
        used[i] = true;
        pairs.emplace_back(text(en[i]), text(t));
        break;
      }
    }
  }
  return pairs;
}

}  // namespace

EvalReport run_similarity_report(const RunConfig& config, EvalEnvironment& env) {
  config.validate();
  const auto registry = OperationRegistry::load(config.registry_path());
  const DatasetBundle bundle = load_for(config, config.dataset, registry);
  EvalReport report;
  report.task = Task::kSimilarity;
  report.metric = "similarity";
  report.metadata = base_metadata(config, env, nullptr);
  report.metadata["alignment"] = "by index when sizes match, else by gold label";
  for (Language lang : ordered(config.languages)) {
    if (lang == Language::kEN) continue;
    for (const auto& split : bundle.split_names()) {
      std::vector<std::pair<std::string, std::string>> pairs;
      if (config.format() == DatasetFormat::kCoxql) {
        pairs = align(of_language(bundle.coxql, split, Language::kEN), of_language(bundle.coxql, split, lang),
                      [&](const CoxqlRecord& r) { return canonicalize(r.parse, registry).value_or(r.parse); },
                      [](const CoxqlRecord& r) { return r.question; });
      } else {
        pairs = align(of_language(bundle.compass, split, Language::kEN),
                      of_language(bundle.compass, split, lang),
                      [](const CompassRecord& r) { return r.operation_name; },
                      [](const CompassRecord& r) { return r.user_question; });
      }
      if (pairs.empty()) continue;
      const SimilarityReport sim = corpus_similarity_report(pairs, *env.provider);
      ReportCell cell;
      cell.language = lang;
      cell.method = split;
      cell.model_id = env.provider->id();
      cell.total = pairs.size();
      cell.correct = pairs.size();
      finish_cell(cell);
      cell.score = sim.percent;
      cell.extra = {{"mean_cosine", sim.mean_cosine}};
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

json TranslationSummary::to_json() const {
  json files = json::array();
  for (const auto& p : written) files.push_back(p.string());
  return {{"written", files}, {"translated", translated}, {"dropped", dropped}};
}

TranslationSummary run_translation(const RunConfig& config, EvalEnvironment& env, const fs::path& out) {
  config.validate();
  const auto registry = OperationRegistry::load(config.registry_path());
  RunConfig en_only = config;
  en_only.languages = {Language::kEN};
  const DatasetBundle bundle = load_for(en_only, config.dataset, registry);
  TranslationSummary summary;
  for (Language lang : ordered(config.languages)) {
    if (lang == Language::kEN) continue;
    for (const auto& split : bundle.split_names()) {
      const fs::path file = out / fmt::format("{}.{}.{}.json", bundle.name, split, lower_code(lang));
      if (config.format() == DatasetFormat::kCoxql) {
        const auto source = of_language(bundle.coxql, split, Language::kEN);
        std::vector<CoxqlRecord> translated(source.size());
        parallel_for(source.size(), config.parallelism, [&](std::size_t i) {
          translated[i] = translate_record(source[i], lang, *env.backend);
        });
        summary.translated += translated.size();
        save_records(file, std::span<const CoxqlRecord>(translated));
      } else {
        const auto source = of_language(bundle.compass, split, Language::kEN);
        std::vector<CompassTranslation> results(source.size());
        parallel_for(source.size(), config.parallelism, [&](std::size_t i) {
          results[i] = translate_record(source[i], lang, *env.backend);
        });
        std::vector<CompassRecord> kept;
        for (const auto& r : results) {
          if (r.record) {
            kept.push_back(*r.record);
          } else {
            ++summary.dropped;
          }
        }
        summary.translated += kept.size();
        save_records(file, std::span<const CompassRecord>(kept));
      }
      summary.written.push_back(file);
    }
  }
  return summary;
}

RunResult run_evaluation(const RunConfig& config, EvalEnvironment& env) {
  config.validate();
  RunResult result;
  std::optional<fs::path> trace_dir;
  const std::string started = now_iso();
  if (!config.out_dir.empty()) {
    const std::string stamp = fmt::format("{:%Y%m%d-%H%M%S}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                                   std::chrono::system_clock::now())));
    fs::path dir = config.out_dir / (stamp + "-" + std::string(to_string(config.task)));
    for (int n = 2; fs::exists(dir); ++n) {
      dir = config.out_dir / fmt::format("{}-{}-{}", stamp, to_string(config.task), n);
    }
    fs::create_directories(dir / "traces");
    std::ofstream(dir / "config.json", std::ios::binary) << config.to_json().dump(2) << '\n';
    result.run_dir = dir;
    trace_dir = dir / "traces";
  }
  switch (config.task) {
    case Task::kParse: result.report = run_parse_eval(config, env, trace_dir); break;
    case Task::kIntent: result.report = run_intent_eval(config, env, trace_dir); break;
    case Task::kExtraction: result.report = run_extraction_eval(config, env, trace_dir); break;
    case Task::kSimilarity: result.report = run_similarity_report(config, env); break;
    default:
      throw ConfigError("task " + std::string(to_string(config.task)) + " is not an evaluation");
  }
  result.report.metadata["timestamps"] = {{"started", started}, {"finished", now_iso()}};
  if (result.run_dir) {
    emit_report(result.report, ReportFormat::kJson, *result.run_dir / "report.json");
    emit_report(result.report, ReportFormat::kCsv, *result.run_dir / "report.csv");
    emit_report(result.report, ReportFormat::kMarkdown, *result.run_dir / "report.md");
  }
  return result;
}

}  // namespace xql
