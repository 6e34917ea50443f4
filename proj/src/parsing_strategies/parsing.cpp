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

#include "xql/parsing.hpp"

#include <algorithm>

#include "xql/error.hpp"
#include "xql/generation.hpp"
#include "xql/text.hpp"

namespace xql {
namespace {

using nlohmann::json;

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string format_demos(const DemonstrationSet& demos, std::string_view label,
                         const std::function<std::string(const TrainExample&)>& answer) {
  std::string out;
  for (const auto& e : demos.entries) {
    out += "Question: " + e.question + "\n" + std::string(label) + ": " + answer(e) + "\n";
  }
  return out;
}

json demos_json(const DemonstrationSet& demos) {
  json j = json::array();
  for (std::size_t i = 0; i < demos.entries.size(); ++i) {
    j.push_back({{"index", demos.source_indices[i]}, {"question", demos.entries[i].question},
                 {"parse", demos.entries[i].parse}});
  }
  return j;
}

void fail(ParsingTrace& trace, std::string kind, std::string message) {
  trace.final_parse.reset();
  trace.failure = ParseFailure{std::move(kind), std::move(message)};
}

// Runs one grammar-constrained generation and records it as a stage.
// Returns the canonical text when generation completed.
std::optional<std::string> constrained_stage(ParsingTrace& trace, std::string stage,
                                             std::string prompt,
                                             const std::shared_ptr<const Grammar>& grammar,
                                             const ParsingContext& ctx, Backend& backend,
                                             json derived = json::object()) {
  GenerationRequest req;
  req.prompt = std::move(prompt);
  req.max_new_tokens = ctx.options().max_new_tokens;
  req.constraint.emplace(grammar);
  const Completion c = generate_constrained(req, backend, ctx.tokenizer());
  derived["finish_reason"] = to_string(c.finish_reason);
  derived["token_count"] = c.token_count;
  trace.stages.push_back({std::move(stage), req.prompt, c.text, derived});
  if (c.finish_reason == FinishReason::kLength) {
    fail(trace, "BudgetExhausted", "generation stopped after " +
                                       std::to_string(c.token_count) + " tokens: '" + c.text + "'");
    return std::nullopt;
  }
  if (c.finish_reason == FinishReason::kConstraintExhausted) {
    fail(trace, "ConstraintExhausted", "no grammatical continuation: '" + c.text + "'");
    return std::nullopt;
  }
  return c.text;
}

std::string generate_plain(ParsingTrace& trace, std::string stage, std::string prompt,
                           const ParsingContext& ctx, Backend& backend) {
  GenerationRequest req;
  req.prompt = std::move(prompt);
  req.max_new_tokens = ctx.options().max_new_tokens;
  req.stop_sequences = {"\n"};
  const Completion c = generate(req, backend);
  trace.stages.push_back({std::move(stage), req.prompt, c.text,
                          {{"finish_reason", to_string(c.finish_reason)}}});
  return c.text;
}

// Shared stage 1 and 2 of MP and MP+. Returns the stage-2 raw text, or
// nullopt after recording a failure.
std::optional<std::string> mp_stages(ParsingTrace& trace, const std::string& question,
                                     const ParsingContext& ctx, Backend& backend) {
  const OperationRegistry& reg = ctx.registry();
  const auto qvec = ctx.provider().embed_one(question);

  const auto demos1 = ctx.demonstrations(qvec, ctx.options().mp_stage1_shots);
  const std::string prompt1 = ctx.prompts().render(
      "mp_stage1",
      {{"operations", ctx.operation_listing()},
       {"demonstrations",
        format_demos(demos1, "Operation",
                     [&](const TrainExample& e) {
                       return main_intent(*parse_label(e.parse, reg), reg);
                     })},
       {"question", question}});
  const std::string raw1 = generate_plain(trace, "select_operation", prompt1, ctx, backend);
  std::string op = to_lower_ascii(trim(raw1));
  while (!op.empty() && op.back() == '.') op.pop_back();
  const OperationSpec* spec = reg.find(op);
  trace.stages.back().derived["operation"] = op;
  if (spec == nullptr || spec->is_logic()) {
    fail(trace, "UnknownOperation", "stage-1 output '" + raw1 + "' is not an operation");
    return std::nullopt;
  }

  DemonstrationSet demos2;
  try {
    demos2 = ctx.demonstrations(qvec, ctx.options().mp_stage2_shots, std::set<std::string>{op});
  } catch (const std::invalid_argument&) {
    // No training example of this operation; prompt without demonstrations.
  }
  std::vector<std::string> filters;
  for (const auto& o : reg.operations()) {
    if (o.is_filter()) filters.push_back(o.signature());
  }
  const std::string prompt2 = ctx.prompts().render(
      "mp_stage2",
      {{"operation", op},
       {"signature", spec->signature()},
       {"filters", join_lines(filters)},
       {"demonstrations",
        format_demos(demos2, "Parse", [](const TrainExample& e) { return e.parse; })},
       {"question", question}});
  std::string raw2 = generate_plain(trace, "fill_attributes", prompt2, ctx, backend);
  trace.stages.back().derived["demonstrations"] = demos_json(demos2);
  return std::string(trim(raw2));
}

}  // namespace

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kNN: return "nn";
    case Strategy::kGD: return "gd";
    case Strategy::kMP: return "mp";
    case Strategy::kMPPlus: return "mp_plus";
    case Strategy::kGMP: return "gmp";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  const std::string t = to_lower_ascii(text);
  if (t == "nn") return Strategy::kNN;
  if (t == "gd") return Strategy::kGD;
  if (t == "mp") return Strategy::kMP;
  if (t == "mp_plus" || t == "mp+") return Strategy::kMPPlus;
  if (t == "gmp") return Strategy::kGMP;
  return std::nullopt;
}

json ParsingTrace::to_json() const {
  json stages_json = json::array();
  for (const auto& s : stages) {
    stages_json.push_back(
        {{"name", s.name}, {"prompt", s.prompt}, {"raw_output", s.raw_output}, {"derived", s.derived}});
  }
  json j = {{"strategy", xql::to_string(strategy)},
            {"question", question},
            {"stages", std::move(stages_json)},
            {"final_parse", final_parse ? json(*final_parse) : json(nullptr)},
            {"failure", failure ? json{{"kind", failure->kind}, {"message", failure->message}}
                                : json(nullptr)}};
  return j;
}

ParsingContext::ParsingContext(std::shared_ptr<const OperationRegistry> registry,
                               std::shared_ptr<const Tokenizer> tokenizer, PromptLibrary prompts,
                               std::vector<TrainExample> train, EmbeddingProvider& provider,
                               ParsingOptions options)
    : registry_(std::move(registry)),
      tokenizer_(std::move(tokenizer)),
      prompts_(std::move(prompts)),
      options_(options),
      train_(std::move(train)),
      provider_(&provider) {
  if (train_.empty()) throw std::invalid_argument("training split is empty");
  full_grammar_ = std::make_shared<const Grammar>(build_full_grammar(*registry_));
  for (const auto& name : registry_->intent_names()) {
    intent_grammars_[name] =
        std::make_shared<const Grammar>(derive_intent_grammar(*full_grammar_, name));
  }
  std::vector<LabeledText> labelled;
  labelled.reserve(train_.size());
  for (std::size_t i = 0; i < train_.size(); ++i) {
    auto tree = parse_label(train_[i].parse, *registry_);
    if (!tree) {
      throw CorruptDataError("training example " + std::to_string(i) + " has unparseable gold '" +
                             train_[i].parse + "': " + tree.error().message());
    }
    train_[i].parse = serialize(*tree);
    labelled.push_back({train_[i].question, main_intent(*tree, *registry_)});
  }
  pool_ = EmbeddedPool::build(std::move(labelled), provider);
  centroids_ = build_centroids(pool_.examples, provider);
}

const std::shared_ptr<const Grammar>& ParsingContext::intent_grammar(
    const std::string& intent) const {
  auto it = intent_grammars_.find(intent);
  if (it == intent_grammars_.end()) throw std::invalid_argument("not an intent: " + intent);
  return it->second;
}

DemonstrationSet ParsingContext::demonstrations(
    const EmbeddingVector& query, std::size_t shots,
    const std::optional<std::set<std::string>>& intents) const {
  DemonstrationSet set;
  if (shots == 0) return set;
  for (const auto& hit : topk_examples(query, pool_, shots, intents)) {
    set.entries.push_back(train_[hit.example_ref]);
    set.source_indices.push_back(hit.example_ref);
  }
  return set;
}

std::string ParsingContext::operation_listing() const {
  std::vector<std::string> lines;
  for (const auto& op : registry_->operations()) {
    if (op.is_logic()) continue;
    lines.push_back(op.description.empty() ? op.name : op.name + ": " + op.description);
  }
  return join_lines(lines);
}

ParsingTrace parse_nn(const std::string& question, const ParsingContext& ctx) {
  ParsingTrace trace;
  trace.strategy = Strategy::kNN;
  trace.question = question;
  const auto hits = topk_examples(ctx.provider().embed_one(question), ctx.pool(), 1);
  const auto& best = ctx.train()[hits[0].example_ref];
  trace.stages.push_back({"nearest_neighbor", "", best.parse,
                          {{"index", hits[0].example_ref},
                           {"score", hits[0].score},
                           {"question", best.question}}});
  trace.final_parse = best.parse;
  return trace;
}

ParsingTrace parse_gd(const std::string& question, const ParsingContext& ctx, Backend& backend) {
  ParsingTrace trace;
  trace.strategy = Strategy::kGD;
  trace.question = question;
  const auto demos = ctx.demonstrations(ctx.provider().embed_one(question), ctx.options().gd_shots);
  const std::string prompt = ctx.prompts().render(
      "gd", {{"operations", ctx.operation_listing()},
             {"demonstrations",
              format_demos(demos, "Parse", [](const TrainExample& e) { return e.parse; })},
             {"question", question}});
  auto text = constrained_stage(trace, "guided_decoding", prompt, ctx.full_grammar(), ctx, backend,
                                {{"demonstrations", demos_json(demos)}});
  if (!text) return trace;
  if (auto canon = canonicalize(*text, ctx.registry())) {
    trace.final_parse = *canon;
  } else {
    fail(trace, "Unparseable", "constrained output does not parse: '" + *text + "'");
  }
  return trace;
}

ParsingTrace parse_mp(const std::string& question, const ParsingContext& ctx, Backend& backend) {
  ParsingTrace trace;
  trace.strategy = Strategy::kMP;
  trace.question = question;
  auto raw = mp_stages(trace, question, ctx, backend);
  if (!raw) return trace;
  const auto parsed = parse_label(*raw, ctx.registry());
  if (!parsed) {
    fail(trace, std::string(to_string(parsed.error().kind)), parsed.error().message());
    return trace;
  }
  const CheckResult check = template_check(*raw, ctx.registry());
  if (check.status != CheckStatus::kValid) {
    std::string msg = "output is not in template form";
    for (const auto& d : check.diagnostics) msg += "; " + d;
    fail(trace, "MissingSlot", msg);
    return trace;
  }
  trace.final_parse = serialize(*parsed);
  return trace;
}

ParsingTrace parse_mp_plus(const std::string& question, const ParsingContext& ctx,
                           Backend& backend) {
  ParsingTrace trace;
  trace.strategy = Strategy::kMPPlus;
  trace.question = question;
  auto raw = mp_stages(trace, question, ctx, backend);
  if (!raw) return trace;
  const CheckResult check = template_check(*raw, ctx.registry());
  trace.stages.push_back({"template_check", "", *raw,
                          {{"status", to_string(check.status)}, {"diagnostics", check.diagnostics}}});
  if (check.status == CheckStatus::kRejected || !check.tree) {
    std::string msg = "template check rejected '" + *raw + "'";
    for (const auto& d : check.diagnostics) msg += "; " + d;
    fail(trace, "TemplateRejected", msg);
    return trace;
  }
  trace.final_parse = serialize(*check.tree);
  return trace;
}

ParsingTrace parse_gmp(const std::string& question, const ParsingContext& ctx, Backend& backend) {
  ParsingTrace trace;
  trace.strategy = Strategy::kGMP;
  trace.question = question;
  const auto& opts = ctx.options();

  // (1) centroid table.
  json table = json::array();
  for (const auto& c : ctx.centroids()) {
    table.push_back({{"intent", c.intent}, {"support_count", c.support_count}});
  }
  trace.stages.push_back({"intent_centroids", "", "", {{"centroids", table}}});

  // (2) candidate intents and their demonstrations.
  const auto qvec = ctx.provider().embed_one(question);
  const std::size_t k = std::min(opts.gmp_k, ctx.centroids().size());
  const auto candidates = topk_intents(qvec, ctx.centroids(), k);
  std::vector<std::string> names;
  json cand_json = json::array();
  DemonstrationSet stage3_demos;
  for (const auto& c : candidates) {
    names.push_back(c.intent);
    const auto demos =
        ctx.demonstrations(qvec, opts.gmp_demos_per_candidate, std::set<std::string>{c.intent});
    cand_json.push_back({{"intent", c.intent}, {"score", c.score}, {"demonstrations", demos_json(demos)}});
    stage3_demos.entries.insert(stage3_demos.entries.end(), demos.entries.begin(),
                                demos.entries.end());
    stage3_demos.source_indices.insert(stage3_demos.source_indices.end(),
                                       demos.source_indices.begin(), demos.source_indices.end());
  }
  trace.stages.push_back({"candidate_intents", "", "", {{"candidates", cand_json}}});

  // (3) coarse intent under the candidate-restricted intent-only grammar.
  const auto intent_only =
      std::make_shared<const Grammar>(derive_intent_only_grammar(ctx.registry(), names));
  std::string candidate_lines;
  for (const auto& n : names) {
    const OperationSpec* spec = ctx.registry().find(n);
    candidate_lines += spec->description.empty() ? n + "\n" : n + ": " + spec->description + "\n";
  }
  const OperationRegistry& reg = ctx.registry();
  const std::string prompt3 = ctx.prompts().render(
      "gmp_stage3",
      {{"candidates", candidate_lines},
       {"demonstrations",
        format_demos(stage3_demos, "Intent",
                     [&](const TrainExample& e) {
                       return main_intent(*parse_label(e.parse, reg), reg);
                     })},
       {"question", question}});
  auto intent = constrained_stage(trace, "select_intent", prompt3, intent_only, ctx, backend);
  if (!intent) return trace;
  if (std::find(names.begin(), names.end(), *intent) == names.end()) {
    fail(trace, "UnknownOperation", "stage-3 intent '" + *intent + "' is not a candidate");
    return trace;
  }

  // (4) attributes under the intent-specific grammar.
  const auto& grammar = ctx.intent_grammar(*intent);
  const auto demos4 = ctx.demonstrations(qvec, opts.gmp_stage4_shots, std::set<std::string>{*intent});
  const std::string prompt4 = ctx.prompts().render(
      "gmp_stage4",
      {{"operation", *intent},
       {"grammar", grammar->dump()},
       {"demonstrations",
        format_demos(demos4, "Parse", [](const TrainExample& e) { return e.parse; })},
       {"question", question}});
  auto text = constrained_stage(trace, "fill_attributes", prompt4, grammar, ctx, backend,
                                {{"demonstrations", demos_json(demos4)}});
  if (!text) return trace;
  if (auto canon = canonicalize(*text, reg)) {
    trace.final_parse = *canon;
  } else {
    fail(trace, "Unparseable", "constrained output does not parse: '" + *text + "'");
  }
  return trace;
}

ParsingTrace run_strategy(Strategy strategy, const std::string& question,
                          const ParsingContext& ctx, Backend* backend) {
  if (strategy == Strategy::kNN) return parse_nn(question, ctx);
  if (backend == nullptr) {
    throw ConfigError("strategy " + std::string(to_string(strategy)) + " needs a backend");
  }
  switch (strategy) {
    case Strategy::kGD: return parse_gd(question, ctx, *backend);
    case Strategy::kMP: return parse_mp(question, ctx, *backend);
    case Strategy::kMPPlus: return parse_mp_plus(question, ctx, *backend);
    case Strategy::kGMP: return parse_gmp(question, ctx, *backend);
    case Strategy::kNN: break;
  }
  return parse_nn(question, ctx);
}

}  // namespace xql
