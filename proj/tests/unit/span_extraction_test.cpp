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
#include <random>

#include "../support/oracle_backend.hpp"
#include "../support/random_text.hpp"
#include "../support/test_paths.hpp"
#include "xql/extraction.hpp"
#include "xql/text.hpp"

namespace xql {
namespace {

std::vector<CompassRecord> load_compass(const std::string& file) {
  std::ifstream in(testing::compass_dir() / file);
  std::vector<CompassRecord> out;
  for (const auto& r : nlohmann::json::parse(in)) {
    out.push_back({r["user_question"], r["operation_name"], r["custom_input"],
                   require_language(r["language"].get<std::string>())});
  }
  return out;
}

std::size_t count(const std::string& hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto at = hay.find(needle); at != std::string::npos; at = hay.find(needle, at + 1)) ++n;
  return n;
}

TEST(Decoders, Naive) {
  EXPECT_EQ(decode_naive("the movie was great").extracted, "the movie was great");
  EXPECT_EQ(decode_naive("  \"good film\" ").extracted, "good film");
  EXPECT_FALSE(decode_naive("").extracted);
  EXPECT_FALSE(decode_naive("").error);
}

TEST(Decoders, Tanl) {
  EXPECT_EQ(decode_tanl("Explain [ great movie | custom_input ] please").extracted, "great movie");
  const auto missing = decode_tanl("no annotation here");
  EXPECT_FALSE(missing.extracted);
  ASSERT_TRUE(missing.error);
  EXPECT_EQ(missing.error->kind, DecodeErrorKind::kMissingAnnotation);
  const auto two = decode_tanl("[ a | custom_input ] and [ b | custom_input ]");
  EXPECT_EQ(two.extracted, "a");
  EXPECT_EQ(two.diagnostics, std::vector<std::string>{"MultipleAnnotations"});
  EXPECT_EQ(decode_tanl("a | custom_input ]").error->kind, DecodeErrorKind::kUnbalancedMarkers);
  EXPECT_EQ(decode_tanl("Explain [ great movie | custom_input please").error->kind,
            DecodeErrorKind::kUnbalancedMarkers);
  EXPECT_EQ(decode_tanl("see [ 1 ] here").error->kind, DecodeErrorKind::kMissingAnnotation);
}

TEST(Decoders, GptNer) {
  EXPECT_EQ(decode_gptner("I watched @@great movie## yesterday").extracted, "great movie");
  const auto open = decode_gptner("@@unclosed");
  ASSERT_TRUE(open.error);
  EXPECT_EQ(open.error->kind, DecodeErrorKind::kUnbalancedMarkers);
  EXPECT_FALSE(open.extracted);
  const auto two = decode_gptner("@@a## and @@b##");
  EXPECT_EQ(two.extracted, "a");
  EXPECT_EQ(two.diagnostics, std::vector<std::string>{"MultipleAnnotations"});
  EXPECT_EQ(decode_gptner("plain text").error->kind, DecodeErrorKind::kMissingAnnotation);
}

TEST(Decoders, Gollie) {
  EXPECT_EQ(decode_gollie("[\"great movie\"]").extracted, "great movie");
  EXPECT_EQ(decode_gollie("['great movie']").extracted, "great movie");
  const auto empty = decode_gollie("[]");
  EXPECT_FALSE(empty.extracted);
  EXPECT_FALSE(empty.error);
  const auto bad = decode_gollie("great movie");
  ASSERT_TRUE(bad.error);
  EXPECT_EQ(bad.error->kind, DecodeErrorKind::kNotAList);
  EXPECT_EQ(decode_gollie("[great]").error->kind, DecodeErrorKind::kNotAList);
  EXPECT_EQ(decode_gollie("[\"a\", \"b\"]").diagnostics, std::vector<std::string>{"ExtraElements:1"});
}

TEST(Decoders, EncodeRoundTripProperty) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const std::string span = testing::random_multiscript(rng, 1, 12);
    const std::string question = testing::random_multiscript(rng, 0, 10) + " " + span + " " +
                                 testing::random_multiscript(rng, 0, 10);
    for (Approach a : kAllApproaches) {
      const auto d = decode(a, encode(a, span, question));
      ASSERT_FALSE(d.error) << to_string(a) << " " << span;
      ASSERT_EQ(d.extracted, span) << to_string(a);
    }
  }
}

TEST(Containment, Examples) {
  EXPECT_TRUE(validate_containment("great", "a great film"));
  EXPECT_FALSE(validate_containment("greatest", "a great film"));
  EXPECT_TRUE(validate_containment("解释太技术化", "我的反馈是：解释太技术化了"));
  EXPECT_FALSE(validate_containment("解释太专业化", "我的反馈是：解释太技术化了"));
  // Decomposed and composed forms compare equal.
  EXPECT_TRUE(validate_containment("cafe\xCC\x81", "the caf\xC3\xA9 was nice"));
}

TEST(Containment, AgreesWithBruteForce) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const std::string hay = testing::random_multiscript(rng, 0, 20, 3);
    const std::string needle = testing::random_multiscript(rng, 0, 3, 3);
    bool brute = needle.empty();
    for (std::size_t off = 0; !brute && off + needle.size() <= hay.size(); ++off) {
      brute = hay.compare(off, needle.size(), needle) == 0;
    }
    EXPECT_EQ(validate_containment(needle, hay), brute) << needle << " in " << hay;
  }
}

TEST(Prompts, ExtractionTemplates) {
  const auto prompts = PromptLibrary::load(testing::prompts_dir());
  std::vector<ExtractionDemo> demos;
  for (const auto& r : load_compass("compass.train.en.json")) {
    if (demos.size() < 10) demos.push_back({r.user_question, r.custom_input});
  }
  const std::string q = "Predict: what a lovely day";
  const auto naive = build_extraction_prompt(Approach::kNaive, q, demos, prompts);
  EXPECT_EQ(count(naive, "[User Question]"), 11u);
  EXPECT_EQ(count(naive, "[Custom Input]"), 11u);
  EXPECT_NE(naive.find("Please return only the custom input as a text string."), std::string::npos);
  EXPECT_TRUE(naive.ends_with("[User Question] " + q + "\n[Custom Input]"));
  const auto tanl = build_extraction_prompt(Approach::kTanl, q, demos, prompts);
  EXPECT_NE(tanl.find("[ extracted_text | custom_input ]"), std::string::npos);
  EXPECT_NE(tanl.find("[ the food was cold and bland | custom_input ]"), std::string::npos);
  const auto ner = build_extraction_prompt(Approach::kGptNer, q, demos, prompts);
  EXPECT_NE(ner.find("Use special tokens @@## to mark the extracted phrase"), std::string::npos);
  const auto gollie = build_extraction_prompt(Approach::kGollie, q, demos, prompts);
  EXPECT_NE(gollie.find("\nclass CustomInput(Entity):\n"), std::string::npos);
  EXPECT_NE(gollie.find("@dataclass\n"), std::string::npos);
  EXPECT_NE(gollie.find("Please return a list of custom input."), std::string::npos);
}

TEST(Extraction, EndToEndWithScriptedBackend) {
  const auto prompts = PromptLibrary::load(testing::prompts_dir());
  const auto train = load_compass("compass.train.en.json");
  const auto test = load_compass("compass.test.en.json");
  std::vector<ExtractionDemo> demos;
  for (std::size_t i = 0; i < 10; ++i) demos.push_back({train[i].user_question, train[i].custom_input});
  auto tokenizer = std::make_shared<const Tokenizer>(make_mock_tokenizer({}));
  for (Approach a : kAllApproaches) {
    testing::OracleBackend backend(tokenizer, [&](const std::string& prompt) {
      for (const auto& r : test) {
        if (prompt.ends_with(r.user_question + "\n[Custom Input]")) {
          return " " + encode(a, r.custom_input, r.user_question);
        }
      }
      return std::string("??");
    });
    std::vector<ExtractionResult> results;
    for (const auto& r : test) {
      results.push_back(extract_custom_input(a, r.user_question, demos, prompts, backend));
    }
    const auto score = score_extraction(results, test);
    EXPECT_EQ(score.micro_f1, 100.0) << to_string(a);
    EXPECT_EQ(score.char_overlap_f1, 100.0);
    for (const auto& r : results) EXPECT_TRUE(r.contained);
  }
}

TEST(Scoring, Examples) {
  std::vector<CompassRecord> golds(4, CompassRecord{"q", "predict", "abc", Language::kEN});
  std::vector<ExtractionResult> results(4);
  for (int i = 0; i < 3; ++i) results[i].extracted = "abc";
  results[3].extracted = "abd";
  EXPECT_EQ(score_extraction(results, golds).micro_f1, 75.0);
  results[0].extracted = "  abc \n";
  EXPECT_EQ(score_extraction(results, golds).micro_f1, 75.0);
  std::vector<ExtractionResult> errors(4);
  for (auto& e : errors) e.decode_error = DecodeError{DecodeErrorKind::kNotAList, ""};
  const auto s = score_extraction(errors, golds);
  EXPECT_EQ(s.micro_f1, 0.0);
  EXPECT_EQ(s.decode_errors, 4u);
  EXPECT_EQ(s.char_overlap_f1, 0.0);
  // Partial extraction gets overlap credit only.
  std::vector<CompassRecord> one{{"q", "predict", "abcd", Language::kEN}};
  std::vector<ExtractionResult> part(1);
  part[0].extracted = "ab";
  const auto p = score_extraction(part, one);
  EXPECT_EQ(p.micro_f1, 0.0);
  EXPECT_NEAR(p.char_overlap_f1, 66.67, 1e-9);
  EXPECT_THROW(score_extraction(part, golds), std::invalid_argument);
}

TEST(Intent, AliasNormalisation) {
  const auto reg = OperationRegistry::load(testing::compass_registry_path());
  const auto aliases = AliasTable::load(testing::data_dir() / "aliases.json");
  EXPECT_EQ(aliases.normalize("rationale", reg), "rationalize");
  EXPECT_EQ(aliases.normalize(" Rationalize.", reg), "rationalize");
  EXPECT_EQ(aliases.normalize("重要性", reg, "zh"), "nlpattribute");
  EXPECT_EQ(aliases.normalize("важность", reg, "ru"), "nlpattribute");
  EXPECT_EQ(aliases.normalize("edit label", reg), "edit_label");
  EXPECT_FALSE(aliases.normalize("explainify", reg));
  EXPECT_FALSE(aliases.normalize("", reg));
}

TEST(Intent, FewShotClassification) {
  const auto reg = OperationRegistry::load(testing::compass_registry_path());
  const auto aliases = AliasTable::load(testing::data_dir() / "aliases.json");
  const auto prompts = PromptLibrary::load(testing::prompts_dir());
  MockEmbeddingProvider provider;
  std::vector<LabeledText> pool;
  for (const auto& r : load_compass("compass.train.en.json")) pool.push_back({r.user_question, r.operation_name});
  const auto embedded = EmbeddedPool::build(pool, provider);
  auto tokenizer = std::make_shared<const Tokenizer>(make_mock_tokenizer({}));

  // Echo backend: answers with the intent of the first demonstration.
  testing::OracleBackend echo(tokenizer, [](const std::string& prompt) {
    const auto at = prompt.find("[Operation] ");
    return " " + prompt.substr(at + 12, prompt.find('\n', at) - at - 12);
  });
  const auto same = classify_intent_fewshot(pool[7].text, embedded, provider, echo, reg, aliases, prompts);
  EXPECT_EQ(same.intent, pool[7].intent);
  EXPECT_EQ(same.demo_indices.size(), 10u);
  EXPECT_EQ(same.demo_indices.front(), 7u);

  testing::OracleBackend rationale(tokenizer, [](const std::string&) { return " rationale"; });
  EXPECT_EQ(classify_intent_fewshot("Why is 'meh' negative?", embedded, provider, rationale, reg,
                                    aliases, prompts)
                .intent,
            "rationalize");
  testing::OracleBackend unknown(tokenizer, [](const std::string&) { return " explainify"; });
  const auto u = classify_intent_fewshot("Why?", embedded, provider, unknown, reg, aliases, prompts);
  EXPECT_FALSE(u.intent);
  EXPECT_EQ(trim(u.raw_output), "explainify");
}

TEST(GoldSet, BundledCompassRecordsAreContained) {
  for (const char* f : {"compass.train.en.json", "compass.test.en.json", "compass.train.de.json",
                        "compass.train.zh.json"}) {
    for (const auto& r : load_compass(f)) {
      EXPECT_TRUE(validate_containment(r.custom_input, r.user_question)) << r.user_question;
    }
  }
}

}  // namespace
}  // namespace xql
