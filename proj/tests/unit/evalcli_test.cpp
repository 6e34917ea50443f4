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

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "../support/oracle_backend.hpp"
#include "../support/test_paths.hpp"
#include "xql/error.hpp"
#include "xql/eval.hpp"
#include "xql/extraction.hpp"
#include "xql/metrics.hpp"
#include "xql/prompts.hpp"
#include "xql/text.hpp"

namespace xql {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json without_timestamps(json report) {
  report["metadata"].erase("timestamps");
  return report;
}

std::string after_last(const std::string& text, const std::string& marker) {
  const auto at = text.rfind(marker);
  if (at == std::string::npos) return {};
  const auto start = at + marker.size();
  return text.substr(start, text.find('\n', start) - start);
}

void check_accounting(const EvalReport& report) {
  for (const auto& c : report.cells) {
    EXPECT_EQ(c.correct + c.incorrect + c.failed, c.total) << c.method;
    EXPECT_GE(c.score, 0.0);
    EXPECT_LE(c.score, 100.0);
  }
}

class EvalTest : public ::testing::Test {
 protected:
  void SetUp() override {
    tokenizer_ = default_tokenizer(testing::data_dir());
    prompts_ = PromptLibrary::load(testing::prompts_dir());
    tmp_ = fs::temp_directory_path() /
           ("xql_eval_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
    for (const auto& r : read_json(testing::coxql_dir() / "coxql.test.en.json")) {
      coxql_gold_[r["question"]] = r["parse"];
    }
    for (const auto* file : {"compass.test.en.json", "compass.train.en.json"}) {
      for (const auto& r : read_json(testing::compass_dir() / file)) {
        compass_gold_[r["user_question"]] = {r["operation_name"], r["custom_input"]};
      }
    }
  }
  void TearDown() override { fs::remove_all(tmp_); }

  RunConfig config(Task task) const {
    RunConfig c;
    c.task = task;
    c.data_dir = testing::data_dir();
    c.dataset = task == Task::kParse || task == Task::kSimilarity ? testing::coxql_dir()
                                                                  : testing::compass_dir();
    c.backend = "oracle";
    return c;
  }

  EvalEnvironment env(std::shared_ptr<Backend> backend) const {
    EvalEnvironment e;
    e.tokenizer = tokenizer_;
    e.backend = std::move(backend);
    e.provider = std::make_shared<MockEmbeddingProvider>();
    return e;
  }

  std::shared_ptr<testing::OracleBackend> oracle(std::function<std::string(const std::string&)> f) const {
    return std::make_shared<testing::OracleBackend>(tokenizer_, std::move(f));
  }

  /// Which extraction template a prompt was built from.
  Approach approach_of(const std::string& prompt) const {
    Approach best = Approach::kNaive;
    std::size_t best_len = 0;
    for (Approach a : kAllApproaches) {
      const std::string& t = prompts_.get("extract_" + std::string(to_string(a)));
      const std::string head = t.substr(0, t.find('{'));
      if (prompt.starts_with(head) && head.size() > best_len) {
        best = a;
        best_len = head.size();
      }
    }
    return best;
  }

  std::shared_ptr<const Tokenizer> tokenizer_;
  PromptLibrary prompts_;
  fs::path tmp_;
  std::map<std::string, std::string> coxql_gold_;
  std::map<std::string, std::pair<std::string, std::string>> compass_gold_;
};

TEST(EnvInterpolation, ReplacesAndRejectsMissing) {
  const EnvLookup env = [](std::string_view name) -> std::optional<std::string> {
    if (name == "HOST") return "example.test";
    return std::nullopt;
  };
  EXPECT_EQ(interpolate_env("http://${HOST}:8000/v1", env), "http://example.test:8000/v1");
  EXPECT_EQ(interpolate_env("plain", env), "plain");
  EXPECT_THROW(interpolate_env("${NOPE}", env), ConfigError);
  EXPECT_THROW(interpolate_env("${HOST", env), ConfigError);
}

TEST(RunConfigTest, FromJsonAndValidate) {
  const EnvLookup env = [](std::string_view) -> std::optional<std::string> { return "m1"; };
  const auto c = RunConfig::from_json(json{{"task", "parse"},
                                           {"languages", {"en", "zh"}},
                                           {"methods", {"nn", "gmp"}},
                                           {"backend", "http"},
                                           {"backend_model", "${MODEL}"},
                                           {"seed", 17},
                                           {"k", 3}},
                                      env);
  EXPECT_EQ(c.task, Task::kParse);
  EXPECT_EQ(c.backend_model, "m1");
  EXPECT_EQ(c.languages, (std::vector<Language>{Language::kEN, Language::kZH}));
  EXPECT_EQ(c.effective_methods(), (std::vector<std::string>{"nn", "gmp"}));
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.to_json()["seed"], 17);

  RunConfig bad = c;
  bad.methods = {"tanl"};
  EXPECT_THROW(bad.validate(), ConfigError);
  RunConfig no_backend = c;
  no_backend.backend = "none";
  EXPECT_THROW(no_backend.validate(), ConfigError);
  no_backend.methods = {"nn"};
  EXPECT_NO_THROW(no_backend.validate());
  EXPECT_THROW(RunConfig::from_json(json{{"task", "dance"}}), ConfigError);
}

TEST(MicroF1Examples, Captions) {
  const bool three_of_four[] = {true, true, true, false};
  EXPECT_DOUBLE_EQ(micro_f1(three_of_four), 75.0);
  const bool none[] = {false, false, false};
  EXPECT_DOUBLE_EQ(micro_f1(none), 0.0);
  const std::vector<std::string> labels = {"a", "b"};
  EXPECT_DOUBLE_EQ(micro_f1(labels, labels), 100.0);
}

TEST_F(EvalTest, NearestNeighbourWithoutBackend) {
  auto c = config(Task::kParse);
  c.backend = "none";
  c.methods = {"nn"};
  auto e = env(nullptr);
  const auto report = run_parse_eval(c, e);
  ASSERT_EQ(report.cells.size(), 1u);
  EXPECT_EQ(report.cells[0].total, 50u);
  EXPECT_EQ(report.cells[0].model_id, "mock-trigram-256");
  EXPECT_EQ(report.metadata["seed"], 17);
  check_accounting(report);
}

TEST_F(EvalTest, ScriptedGoldParsesScoreHundred) {
  auto gold = coxql_gold_;
  auto answer = [gold](const std::string& prompt) {
    auto it = gold.find(testing::prompt_question(prompt));
    return it == gold.end() ? std::string("unknown") : it->second;
  };
  auto c = config(Task::kParse);
  c.methods = {"gd"};
  auto o = oracle(answer);
  auto e = env(o);
  const auto report = run_parse_eval(c, e);
  ASSERT_EQ(report.cells.size(), 1u);
  EXPECT_EQ(report.cells[0].correct, 50u);
  EXPECT_DOUBLE_EQ(report.cells[0].score, 100.0);

  // Replaying the recorded fixtures through the CLI-style scripted backend
  // gives the same report.
  o->recorded().save(tmp_ / "fixtures.json");
  auto replay_cfg = c;
  replay_cfg.backend = "scripted:" + (tmp_ / "fixtures.json").string();
  auto replay_env = EvalEnvironment::from_config(replay_cfg);
  const auto a = run_parse_eval(replay_cfg, replay_env);
  const auto b = run_parse_eval(replay_cfg, replay_env);
  EXPECT_EQ(without_timestamps(a.to_json()).dump(), without_timestamps(b.to_json()).dump());
  EXPECT_DOUBLE_EQ(a.cells[0].score, 100.0);
}

TEST_F(EvalTest, AlwaysFailingStrategyScoresZero) {
  auto c = config(Task::kParse);
  c.methods = {"mp"};
  auto e = env(oracle([](const std::string&) { return std::string("%%%"); }));
  const auto report = run_parse_eval(c, e);
  const auto& cell = report.cells.at(0);
  EXPECT_DOUBLE_EQ(cell.score, 0.0);
  EXPECT_EQ(cell.failed, cell.total);
  EXPECT_DOUBLE_EQ(cell.failure_rate, 100.0);
}

TEST_F(EvalTest, HardErrorsAreCountedAndRunContinues) {
  auto c = config(Task::kParse);
  c.methods = {"gd", "nn"};
  auto e = env(std::make_shared<ScriptedBackend>(tokenizer_));
  const auto report = run_parse_eval(c, e);
  ASSERT_EQ(report.cells.size(), 2u);
  EXPECT_EQ(report.cells[0].hard_errors, 50u);
  EXPECT_EQ(report.cells[0].failed, 50u);
  EXPECT_EQ(report.cells[1].hard_errors, 0u);
  EXPECT_EQ(report.hard_errors(), 50u);
  check_accounting(report);
}

TEST_F(EvalTest, ParallelismKeepsOrderAndResults) {
  auto gold = coxql_gold_;
  auto answer = [gold](const std::string& prompt) {
    auto it = gold.find(testing::prompt_question(prompt));
    // Every third question gets a wrong but valid answer.
    if (it == gold.end() || it->first.size() % 3 == 0) return std::string("function");
    return it->second;
  };
  auto c = config(Task::kParse);
  c.methods = {"gd"};
  auto o = oracle(answer);
  auto e = env(o);
  (void)run_parse_eval(c, e);  // record every fixture single-threaded first
  auto replay = env(std::make_shared<ScriptedBackend>(o->recorded()));
  c.parallelism = 1;
  c.out_dir = tmp_ / "p1";
  const auto one = run_evaluation(c, replay);
  c.parallelism = 8;
  c.out_dir = tmp_ / "p8";
  const auto eight = run_evaluation(c, replay);
  EXPECT_EQ(one.report.cells[0].correct, eight.report.cells[0].correct);
  const auto traces = slurp(*one.run_dir / "traces" / "en-gd.jsonl");
  EXPECT_EQ(std::count(traces.begin(), traces.end(), '\n'), 50);
  EXPECT_EQ(traces, slurp(*eight.run_dir / "traces" / "en-gd.jsonl"));
}

TEST_F(EvalTest, RunDirectoryLayout) {
  auto c = config(Task::kParse);
  c.backend = "none";
  c.methods = {"nn"};
  c.out_dir = tmp_ / "runs";
  auto e = env(nullptr);
  const auto result = run_evaluation(c, e);
  ASSERT_TRUE(result.run_dir);
  const std::string name = result.run_dir->filename().string();
  EXPECT_TRUE(name.ends_with("-parse_eval")) << name;
  for (const auto* f : {"config.json", "report.json", "report.csv", "report.md", "traces/en-nn.jsonl"}) {
    EXPECT_TRUE(fs::exists(*result.run_dir / f)) << f;
  }
  const auto back = EvalReport::from_json(read_json(*result.run_dir / "report.json"));
  EXPECT_EQ(back.to_json().dump(), result.report.to_json().dump());
  EXPECT_TRUE(result.report.metadata.contains("timestamps"));
  EXPECT_EQ(read_json(*result.run_dir / "config.json")["seed"], 17);
}

TEST_F(EvalTest, IntentEchoingGoldScoresHundred) {
  auto gold = compass_gold_;
  auto c = config(Task::kIntent);
  auto e = env(oracle([gold](const std::string& prompt) {
    return gold.at(after_last(prompt, "[User Question] ")).first;
  }));
  const auto report = run_intent_eval(c, e);
  ASSERT_EQ(report.cells.size(), 1u);
  EXPECT_EQ(report.cells[0].total, 11u);
  EXPECT_DOUBLE_EQ(report.cells[0].score, 100.0);
}

TEST_F(EvalTest, IntentNineOfTen) {
  auto records = read_json(testing::compass_dir() / "compass.test.en.json");
  records.erase(records.begin() + 10, records.end());
  std::ofstream(tmp_ / "compass.test.en.json") << records.dump(2);
  fs::copy_file(testing::compass_dir() / "compass.train.en.json", tmp_ / "compass.train.en.json");
  const std::string wrong = records[4]["user_question"];
  auto gold = compass_gold_;
  auto c = config(Task::kIntent);
  c.dataset = tmp_;
  auto e = env(oracle([gold, wrong](const std::string& prompt) {
    const std::string q = after_last(prompt, "[User Question] ");
    return q == wrong ? std::string(gold.at(q).first == "predict" ? "likelihood" : "predict")
                      : gold.at(q).first;
  }));
  const auto report = run_intent_eval(c, e);
  EXPECT_DOUBLE_EQ(report.cells.at(0).score, 90.0);
  EXPECT_EQ(report.cells.at(0).incorrect, 1u);
}

TEST_F(EvalTest, GridCoversConfiguredLanguages) {
  auto gold = compass_gold_;
  auto c = config(Task::kIntent);
  c.languages = {Language::kDE, Language::kEN};
  auto e = env(oracle([](const std::string&) { return std::string("predict"); }));
  const auto report = run_intent_eval(c, e);
  ASSERT_EQ(report.cells.size(), 2u);
  EXPECT_EQ(report.cells[0].language, Language::kEN);
  EXPECT_EQ(report.cells[1].language, Language::kDE);
  EXPECT_EQ(report.cells[1].total, 0u);  // no DE test split bundled
  check_accounting(report);
}

TEST_F(EvalTest, ExtractionGoldSpansScoreHundredForEveryApproach) {
  auto gold = compass_gold_;
  auto c = config(Task::kExtraction);
  auto e = env(oracle([this, gold](const std::string& prompt) {
    const std::string q = after_last(prompt, "[User Question] ");
    return encode(approach_of(prompt), gold.at(q).second, q);
  }));
  const auto report = run_extraction_eval(c, e);
  ASSERT_EQ(report.cells.size(), 4u);
  for (const auto& cell : report.cells) {
    EXPECT_DOUBLE_EQ(cell.score, 100.0) << cell.method;
    EXPECT_DOUBLE_EQ(cell.extra["char_overlap_f1"].get<double>(), 100.0) << cell.method;
  }
}

TEST_F(EvalTest, ExtractionDecodeErrorsScoreZero) {
  auto c = config(Task::kExtraction);
  c.methods = {"tanl", "gollie"};
  auto e = env(oracle([](const std::string&) { return std::string("no markup at all"); }));
  const auto report = run_extraction_eval(c, e);
  for (const auto& cell : report.cells) {
    EXPECT_DOUBLE_EQ(cell.score, 0.0);
    EXPECT_EQ(cell.extra["decode_errors"], cell.total);
    EXPECT_EQ(cell.failed, cell.total);
  }
}

TEST_F(EvalTest, ExtractionContainmentViolationIsIncorrect) {
  auto c = config(Task::kExtraction);
  c.methods = {"naive"};
  c.out_dir = tmp_ / "runs";
  auto e = env(oracle([](const std::string&) { return std::string("a sentence never asked about"); }));
  const auto result = run_evaluation(c, e);
  const auto& cell = result.report.cells.at(0);
  EXPECT_DOUBLE_EQ(cell.score, 0.0);
  EXPECT_EQ(cell.incorrect, cell.total);
  EXPECT_EQ(cell.extra["not_contained"], cell.total);
  std::ifstream traces(*result.run_dir / "traces" / "en-naive.jsonl");
  std::string line;
  ASSERT_TRUE(std::getline(traces, line));
  EXPECT_FALSE(json::parse(line)["result"]["contained"].get<bool>());
}

TEST_F(EvalTest, MarkdownCsvAndEmptyReports) {
  auto c = config(Task::kParse);
  c.backend = "none";
  c.methods = {"nn"};
  auto e = env(nullptr);
  const auto report = run_parse_eval(c, e);
  const auto md = render_report(report, ReportFormat::kMarkdown);
  EXPECT_NE(md.find("| model | method | EN | ZH | DE | RU | TE |"), std::string::npos);
  EXPECT_NE(md.find("| mock-trigram-256 | nn |"), std::string::npos);
  const auto csv = render_report(report, ReportFormat::kCsv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);

  EvalReport empty;
  EXPECT_NE(render_report(empty, ReportFormat::kMarkdown).find("| model | method |"), std::string::npos);
  EXPECT_EQ(EvalReport::from_json(empty.to_json()).cells.size(), 0u);
  EXPECT_EQ(render_report(empty, ReportFormat::kCsv).find('\n') + 1,
            render_report(empty, ReportFormat::kCsv).size());
}

TEST_F(EvalTest, SimilarityReportPairsTranslations) {
  auto c = config(Task::kSimilarity);
  c.backend = "none";
  c.languages = {Language::kEN, Language::kDE, Language::kZH};
  auto e = env(nullptr);
  const auto report = run_similarity_report(c, e);
  ASSERT_EQ(report.cells.size(), 2u);
  for (const auto& cell : report.cells) {
    EXPECT_EQ(cell.method, "train");
    EXPECT_GT(cell.total, 0u);
    EXPECT_LE(cell.score, 100.0);
  }
}

TEST_F(EvalTest, TranslationWritesLoadableFiles) {
  auto records = read_json(testing::compass_dir() / "compass.train.en.json");
  records.erase(records.begin() + 3, records.end());
  fs::create_directories(tmp_ / "in");
  std::ofstream(tmp_ / "in" / "compass.train.en.json") << records.dump(2);
  auto c = config(Task::kTranslate);
  c.dataset = tmp_ / "in";
  c.dataset_format = DatasetFormat::kCompass;
  c.languages = {Language::kDE};
  // Keeps the English text; containment then holds trivially except for the
  // record whose answer drops the custom input.
  const std::string broken = records[1]["user_question"];
  auto e = env(oracle([broken](const std::string& prompt) {
    const auto j = json::parse(prompt.substr(prompt.find('{'), prompt.rfind('}') - prompt.find('{') + 1));
    if (j["user_question"] == broken) return json{{"user_question", "x"}, {"custom_input", "y"}}.dump();
    return j.dump();
  }));
  const auto summary = run_translation(c, e, tmp_ / "out");
  EXPECT_EQ(summary.translated, 2u);
  EXPECT_EQ(summary.dropped, 1u);
  ASSERT_EQ(summary.written.size(), 1u);
  EXPECT_EQ(summary.written[0].filename(), "compass.train.de.json");
  const auto registry = OperationRegistry::load(testing::compass_registry_path());
  const auto bundle = load_dataset(summary.written[0], DatasetFormat::kCompass, registry);
  EXPECT_EQ(bundle.size("train"), 2u);
  EXPECT_EQ(bundle.compass.at("train")[0].language, Language::kDE);
}

}  // namespace
}  // namespace xql
