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

// xqlparse: evaluation and dataset command-line tool.

#include <fmt/format.h>

#include <iostream>

#include "CLI11.hpp"
#include "xql/corpus.hpp"
#include "xql/error.hpp"
#include "xql/eval.hpp"
#include "xql/grammar.hpp"
#include "xql/text.hpp"

#ifndef XQL_DATA_DIR
#define XQL_DATA_DIR "data"
#endif

namespace {

using namespace xql;
namespace fs = std::filesystem;

struct Flags {
  std::string config_file;
  std::string task = "parse";
  std::string data_dir = XQL_DATA_DIR;
  std::string dataset;
  std::string train_dataset;
  std::string format;
  std::string languages;
  std::string methods;
  std::string backend;
  std::string backend_url;
  std::string model;
  std::string embed;
  std::string embed_url;
  std::string embed_model;
  std::string embed_cache;
  std::string tokenizer;
  std::size_t shots = 0;
  std::size_t k = 3;
  std::uint64_t seed = 17;
  std::size_t parallelism = 4;
  std::string out;
  std::string report_format = "markdown";
  bool logit_bias = false;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string item(trim(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void add_data_options(CLI::App* cmd, Flags& f) {
  cmd->add_option("--data-dir", f.data_dir, "Registry, prompt, and alias directory")->capture_default_str();
  cmd->add_option("--dataset", f.dataset, "Dataset directory or file");
  cmd->add_option("--format", f.format, "Dataset format: coxql or compass");
  cmd->add_option("--languages", f.languages, "Comma-separated language codes, e.g. en,zh");
}

void add_model_options(CLI::App* cmd, Flags& f) {
  cmd->add_option("--backend", f.backend, "none, http, or scripted:<fixtures.json>");
  cmd->add_option("--backend-url", f.backend_url, "Completions endpoint URL (implies --backend http)");
  cmd->add_option("--model", f.model, "Model name sent to the endpoint");
  cmd->add_flag("--logit-bias", f.logit_bias, "Constrain decoding through logit_bias");
  cmd->add_option("--tokenizer", f.tokenizer, "Tokenizer vocabulary JSON");
  cmd->add_option("--embed", f.embed, "Embedding provider: mock or http");
  cmd->add_option("--embed-url", f.embed_url, "Embeddings endpoint URL (implies --embed http)");
  cmd->add_option("--embed-model", f.embed_model, "Embedding model name");
  cmd->add_option("--embed-cache", f.embed_cache, "JSONL embedding cache file");
  cmd->add_option("--parallelism", f.parallelism, "Concurrent requests per cell")->capture_default_str();
}

RunConfig to_config(const Flags& f, Task task) {
  RunConfig c = f.config_file.empty() ? RunConfig{} : RunConfig::load(f.config_file);
  if (f.config_file.empty()) c.task = task;
  if (c.data_dir.empty()) c.data_dir = f.data_dir;
  if (!f.dataset.empty()) c.dataset = f.dataset;
  if (!f.train_dataset.empty()) c.train_dataset = fs::path(f.train_dataset);
  if (!f.format.empty()) {
    auto fmt = parse_dataset_format(f.format);
    if (!fmt) throw ConfigError("unknown dataset format '" + f.format + "'");
    c.dataset_format = fmt;
  }
  if (!f.languages.empty()) {
    c.languages.clear();
    for (const auto& l : split_csv(f.languages)) c.languages.push_back(require_language(l));
  }
  if (!f.methods.empty()) c.methods = split_csv(f.methods);
  if (!f.backend.empty()) c.backend = f.backend;
  if (!f.backend_url.empty()) {
    c.backend_url = f.backend_url;
    if (f.backend.empty()) c.backend = "http";
  }
  if (!f.model.empty()) c.backend_model = f.model;
  if (f.logit_bias) c.logit_bias = true;
  if (!f.tokenizer.empty()) c.tokenizer = fs::path(f.tokenizer);
  if (!f.embed.empty()) c.embed = f.embed;
  if (!f.embed_url.empty()) {
    c.embed_url = f.embed_url;
    if (f.embed.empty()) c.embed = "http";
  }
  if (!f.embed_model.empty()) c.embed_model = f.embed_model;
  if (!f.embed_cache.empty()) c.embed_cache = fs::path(f.embed_cache);
  if (f.config_file.empty()) {
    c.shots = f.shots;
    c.k = f.k;
    c.seed = f.seed;
    c.parallelism = f.parallelism;
  }
  if (!f.out.empty()) c.out_dir = f.out;
  if (c.dataset.empty()) {
    c.dataset = fs::path(c.data_dir) / std::string(to_string(c.format()));
  }
  return c;
}

OperationRegistry load_registry(const std::string& which, const fs::path& data_dir) {
  if (auto fmt = parse_dataset_format(which)) {
    return OperationRegistry::load(data_dir / "registry" /
                                   (std::string(to_string(*fmt)) + ".registry.json"));
  }
  return OperationRegistry::load(which);
}

int run_eval(const Flags& f, Task task) {
  RunConfig c = to_config(f, task);
  auto env = EvalEnvironment::from_config(c);
  const RunResult result = run_evaluation(c, env);
  auto fmt = parse_report_format(f.report_format);
  if (!fmt) throw ConfigError("unknown report format '" + f.report_format + "'");
  std::cout << render_report(result.report, *fmt);
  if (result.run_dir) std::cerr << "run directory: " << result.run_dir->string() << "\n";
  if (result.report.hard_errors() > 0) {
    std::cerr << result.report.hard_errors() << " question(s) hit backend or transport errors\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explanation request parsing and evaluation tool"};
  app.require_subcommand(1);
  Flags f;

  auto* eval = app.add_subcommand("eval", "Run a parse, intent, extraction, or similarity evaluation");
  eval->add_option("--config", f.config_file, "Run config JSON; flags override its fields");
  eval->add_option("--task", f.task, "parse, intent, extraction, or similarity")->capture_default_str();
  add_data_options(eval, f);
  eval->add_option("--train-dataset", f.train_dataset, "Training data when separate from --dataset");
  eval->add_option("--strategies,--approaches,--methods", f.methods,
                   "Comma-separated strategies (nn,gd,mp,mp_plus,gmp) or approaches (naive,tanl,gptner,gollie)");
  add_model_options(eval, f);
  eval->add_option("--shots", f.shots, "Demonstrations per prompt; 0 keeps the task default");
  eval->add_option("--k", f.k, "Candidate intents for GMP")->capture_default_str();
  eval->add_option("--seed", f.seed, "Recorded in the report")->capture_default_str();
  eval->add_option("--out", f.out, "Parent directory for the run directory");
  eval->add_option("--report", f.report_format, "Report printed to stdout: markdown, json, or csv")
      ->capture_default_str();

  auto* similarity = app.add_subcommand("similarity", "Embedding similarity between English and translated records");
  add_data_options(similarity, f);
  add_model_options(similarity, f);
  similarity->add_option("--out", f.out, "Parent directory for the run directory");
  similarity->add_option("--report", f.report_format, "markdown, json, or csv")->capture_default_str();

  auto* translate = app.add_subcommand("translate", "Machine-translate English splits into other languages");
  add_data_options(translate, f);
  add_model_options(translate, f);
  translate->add_option("--out", f.out, "Directory for translated files")->required();

  auto* stats = app.add_subcommand("stats", "Record counts per split, operation, and language");
  add_data_options(stats, f);
  bool stats_json = false;
  stats->add_flag("--json", stats_json, "Print JSON instead of markdown");

  auto* validate = app.add_subcommand("validate", "Check a dataset against the schema, registry, and containment rule");
  add_data_options(validate, f);

  auto* grammar = app.add_subcommand("grammar", "Grammar utilities");
  grammar->require_subcommand(1);
  auto* dump = grammar->add_subcommand("dump", "Print the label grammar");
  std::string registry_name = "coxql";
  std::string intent;
  bool intents_only = false;
  dump->add_option("--data-dir", f.data_dir, "Registry directory")->capture_default_str();
  dump->add_option("--registry", registry_name, "coxql, compass, or a registry file")->capture_default_str();
  dump->add_option("--intent", intent, "Print the grammar restricted to one intent");
  dump->add_flag("--intents-only", intents_only, "Print the intent-only grammar");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval->parsed()) {
      auto task = parse_task(f.task);
      if (!task || *task == Task::kTranslate || *task == Task::kStats) {
        throw ConfigError("eval --task must be parse, intent, extraction, or similarity");
      }
      return run_eval(f, *task);
    }
    if (similarity->parsed()) return run_eval(f, Task::kSimilarity);
    if (translate->parsed()) {
      RunConfig c = to_config(f, Task::kTranslate);
      auto env = EvalEnvironment::from_config(c);
      const auto summary = run_translation(c, env, f.out);
      std::cout << summary.to_json().dump(2) << "\n";
      return 0;
    }
    if (stats->parsed() || validate->parsed()) {
      RunConfig c = to_config(f, Task::kStats);
      const auto registry = OperationRegistry::load(c.registry_path());
      LoadOptions opts;
      opts.languages = c.languages;
      if (f.languages.empty()) opts.languages.clear();
      opts.strict = false;
      const auto bundle = load_dataset(c.dataset, c.format(), registry, opts);
      if (validate->parsed()) {
        std::cout << bundle.report.to_json().dump(2) << "\n";
        return bundle.report.ok() ? 0 : 1;
      }
      if (!bundle.report.ok()) {
        std::cerr << bundle.report.issues.size() << " record(s) failed validation and are not counted\n";
      }
      const auto s = dataset_stats(bundle, registry);
      std::cout << (stats_json ? s.to_json().dump(2) + "\n" : s.to_markdown());
      return 0;
    }
    if (dump->parsed()) {
      const auto registry = load_registry(registry_name, f.data_dir);
      if (intents_only) {
        std::cout << derive_intent_only_grammar(registry).dump();
      } else {
        const Grammar full = build_full_grammar(registry);
        std::cout << (intent.empty() ? full.dump() : derive_intent_grammar(full, intent).dump());
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
