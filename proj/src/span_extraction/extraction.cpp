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

#include "xql/extraction.hpp"

#include <algorithm>
#include <fstream>

#include "xql/error.hpp"
#include "xql/generation.hpp"
#include "xql/metrics.hpp"
#include "xql/text.hpp"

namespace xql {
namespace {

using nlohmann::json;

constexpr std::string_view kTanlOpen = "[ ";
constexpr std::string_view kTanlClose = " | custom_input ]";
constexpr std::string_view kNerOpen = "@@";
constexpr std::string_view kNerClose = "##";

Decoded error(DecodeErrorKind kind, std::string message) {
  Decoded d;
  d.error = DecodeError{kind, std::move(message)};
  return d;
}

std::string mark_first(std::string_view span, std::string_view question, std::string_view open,
                       std::string_view close) {
  const std::string marked = std::string(open) + std::string(span) + std::string(close);
  const auto at = span.empty() ? std::string_view::npos : question.find(span);
  if (at == std::string_view::npos) return marked;
  return std::string(question.substr(0, at)) + marked +
         std::string(question.substr(at + span.size()));
}

std::vector<std::string> code_points(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i + 1;
    while (j < text.size() && (static_cast<unsigned char>(text[j]) & 0xC0) == 0x80) ++j;
    out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string strip_quotes(std::string_view s) {
  static const std::pair<std::string_view, std::string_view> kPairs[] = {
      {"\"", "\""}, {"'", "'"}, {"“", "”"}, {"«", "»"}, {"「", "」"}};
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [l, r] : kPairs) {
      if (s.size() >= l.size() + r.size() && s.starts_with(l) && s.ends_with(r)) {
        s = trim(s.substr(l.size(), s.size() - l.size() - r.size()));
        changed = true;
      }
    }
  }
  return std::string(s);
}

// Parses one quoted string at `pos`; advances pos past the closing quote.
std::optional<std::string> read_quoted(std::string_view s, std::size_t& pos) {
  const char q = s[pos];
  std::size_t end = pos + 1;
  while (end < s.size() && s[end] != q) end += s[end] == '\\' ? 2 : 1;
  if (end >= s.size()) return std::nullopt;
  const std::string_view body = s.substr(pos + 1, end - pos - 1);
  pos = end + 1;
  if (q == '"') {
    try {
      return json::parse("\"" + std::string(body) + "\"").get<std::string>();
    } catch (const json::exception&) {
      return std::nullopt;
    }
  }
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '\\' || i + 1 == body.size()) {
      out += body[i];
      continue;
    }
    const char e = body[++i];
    out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
  }
  return out;
}

std::string format_demo(std::string_view question, std::string_view answer) {
  return "[User Question] " + std::string(question) + "\n[Custom Input] " + std::string(answer) +
         "\n";
}

}  // namespace

std::string_view to_string(Approach approach) {
  switch (approach) {
    case Approach::kNaive: return "naive";
    case Approach::kTanl: return "tanl";
    case Approach::kGptNer: return "gptner";
    case Approach::kGollie: return "gollie";
  }
  return "unknown";
}

std::optional<Approach> parse_approach(std::string_view text) {
  const std::string t = to_lower_ascii(text);
  if (t == "naive") return Approach::kNaive;
  if (t == "tanl") return Approach::kTanl;
  if (t == "gptner" || t == "gpt-ner" || t == "gpt_ner") return Approach::kGptNer;
  if (t == "gollie") return Approach::kGollie;
  return std::nullopt;
}

std::string_view to_string(DecodeErrorKind kind) {
  switch (kind) {
    case DecodeErrorKind::kMissingAnnotation: return "MissingAnnotation";
    case DecodeErrorKind::kUnbalancedMarkers: return "UnbalancedMarkers";
    case DecodeErrorKind::kNotAList: return "NotAList";
  }
  return "Unknown";
}

Decoded decode_naive(std::string_view raw) {
  Decoded d;
  std::string s = strip_quotes(trim(raw));
  if (!s.empty()) d.extracted = std::move(s);
  return d;
}

Decoded decode_tanl(std::string_view raw) {
  if (trim(raw).empty()) return {};
  const auto close = raw.find(kTanlClose);
  if (close == std::string_view::npos) {
    const auto open = raw.find(kTanlOpen);
    if (open != std::string_view::npos && raw.find(" | custom_input", open) != std::string_view::npos) {
      return error(DecodeErrorKind::kUnbalancedMarkers, "'[ ... | custom_input' without closing ']'");
    }
    return error(DecodeErrorKind::kMissingAnnotation, "no '[ ... | custom_input ]' annotation");
  }
  const auto open = raw.substr(0, close).rfind(kTanlOpen);
  if (open == std::string_view::npos) {
    return error(DecodeErrorKind::kUnbalancedMarkers, "'| custom_input ]' without opening '[ '");
  }
  Decoded d;
  d.extracted = std::string(raw.substr(open + kTanlOpen.size(), close - open - kTanlOpen.size()));
  if (raw.find(kTanlClose, close + kTanlClose.size()) != std::string_view::npos) {
    d.diagnostics.emplace_back("MultipleAnnotations");
  }
  return d;
}

Decoded decode_gptner(std::string_view raw) {
  if (trim(raw).empty()) return {};
  const auto open = raw.find(kNerOpen);
  if (open == std::string_view::npos) {
    if (raw.find(kNerClose) != std::string_view::npos) {
      return error(DecodeErrorKind::kUnbalancedMarkers, "'##' without opening '@@'");
    }
    return error(DecodeErrorKind::kMissingAnnotation, "no '@@...##' annotation");
  }
  const auto close = raw.find(kNerClose, open + kNerOpen.size());
  if (close == std::string_view::npos) {
    return error(DecodeErrorKind::kUnbalancedMarkers, "'@@' without closing '##'");
  }
  Decoded d;
  d.extracted = std::string(raw.substr(open + kNerOpen.size(), close - open - kNerOpen.size()));
  if (raw.find(kNerOpen, close + kNerClose.size()) != std::string_view::npos) {
    d.diagnostics.emplace_back("MultipleAnnotations");
  }
  return d;
}

Decoded decode_gollie(std::string_view raw) {
  const std::string_view s = trim(raw);
  if (s.empty() || s.front() != '[') return error(DecodeErrorKind::kNotAList, "output is not a list");
  std::size_t pos = 1;
  auto skip_ws = [&] {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\n' || s[pos] == '\t' || s[pos] == '\r')) ++pos;
  };
  std::vector<std::string> items;
  skip_ws();
  if (pos < s.size() && s[pos] == ']') {
    ++pos;
  } else {
    for (;;) {
      skip_ws();
      if (pos >= s.size() || (s[pos] != '"' && s[pos] != '\'')) {
        return error(DecodeErrorKind::kNotAList, "list elements must be quoted strings");
      }
      auto item = read_quoted(s, pos);
      if (!item) return error(DecodeErrorKind::kNotAList, "unterminated string in list");
      items.push_back(std::move(*item));
      skip_ws();
      if (pos < s.size() && s[pos] == ',') {
        ++pos;
        continue;
      }
      if (pos < s.size() && s[pos] == ']') {
        ++pos;
        break;
      }
      return error(DecodeErrorKind::kNotAList, "list is not closed");
    }
  }
  Decoded d;
  if (!items.empty()) d.extracted = items.front();
  if (items.size() > 1) d.diagnostics.push_back("ExtraElements:" + std::to_string(items.size() - 1));
  if (pos < s.size()) d.diagnostics.emplace_back("TrailingText");
  return d;
}

Decoded decode(Approach approach, std::string_view raw) {
  switch (approach) {
    case Approach::kNaive: return decode_naive(raw);
    case Approach::kTanl: return decode_tanl(raw);
    case Approach::kGptNer: return decode_gptner(raw);
    case Approach::kGollie: return decode_gollie(raw);
  }
  throw std::invalid_argument("unknown approach");
}

std::string encode_naive(std::string_view span) { return std::string(span); }

std::string encode_tanl(std::string_view span, std::string_view question) {
  return mark_first(span, question, kTanlOpen, kTanlClose);
}

std::string encode_gptner(std::string_view span, std::string_view question) {
  return mark_first(span, question, kNerOpen, kNerClose);
}

std::string encode_gollie(std::string_view span) {
  return json::array({std::string(span)}).dump();
}

std::string encode(Approach approach, std::string_view span, std::string_view question) {
  switch (approach) {
    case Approach::kNaive: return encode_naive(span);
    case Approach::kTanl: return encode_tanl(span, question);
    case Approach::kGptNer: return encode_gptner(span, question);
    case Approach::kGollie: return encode_gollie(span);
  }
  throw std::invalid_argument("unknown approach");
}

bool validate_containment(std::string_view extracted, std::string_view question) {
  return nfc(question).find(nfc(extracted)) != std::string::npos;
}

std::string build_extraction_prompt(Approach approach, std::string_view question,
                                    std::span<const ExtractionDemo> demos,
                                    const PromptLibrary& prompts, std::string_view lang) {
  std::string demo_text;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    if (i > 0) demo_text += "\n";
    demo_text += format_demo(demos[i].question,
                             encode(approach, demos[i].custom_input, demos[i].question));
  }
  return prompts.render("extract_" + std::string(to_string(approach)),
                        {{"demonstrations", demo_text}, {"question", std::string(question)}}, lang);
}

json ExtractionResult::to_json() const {
  return {{"approach", xql::to_string(approach)},
          {"prompt", prompt},
          {"raw_output", raw_output},
          {"extracted", extracted ? json(*extracted) : json(nullptr)},
          {"contained", contained},
          {"decode_error", decode_error ? json{{"kind", xql::to_string(decode_error->kind)},
                                               {"message", decode_error->message}}
                                        : json(nullptr)},
          {"diagnostics", diagnostics}};
}

ExtractionResult extract_custom_input(Approach approach, const std::string& question,
                                      std::span<const ExtractionDemo> demos,
                                      const PromptLibrary& prompts, Backend& backend,
                                      std::string_view lang, int max_new_tokens) {
  ExtractionResult r;
  r.approach = approach;
  r.prompt = build_extraction_prompt(approach, question, demos, prompts, lang);
  GenerationRequest req;
  req.prompt = r.prompt;
  req.max_new_tokens = max_new_tokens;
  req.stop_sequences = {"\n[User Question]"};
  r.raw_output = generate(req, backend).text;
  Decoded d = decode(approach, r.raw_output);
  r.extracted = std::move(d.extracted);
  r.decode_error = std::move(d.error);
  r.diagnostics = std::move(d.diagnostics);
  r.contained = r.extracted && validate_containment(*r.extracted, question);
  return r;
}

ExtractionScore score_extraction(std::span<const ExtractionResult> results,
                                 std::span<const CompassRecord> golds) {
  if (results.size() != golds.size()) {
    throw std::invalid_argument("results and golds differ in length");
  }
  ExtractionScore s;
  s.total = results.size();
  std::unique_ptr<bool[]> hits(new bool[s.total]);
  std::size_t overlap = 0, predicted = 0, gold_chars = 0;
  for (std::size_t i = 0; i < s.total; ++i) {
    const auto& r = results[i];
    if (r.decode_error) ++s.decode_errors;
    if (r.extracted && !r.contained) ++s.not_contained;
    const std::string gold = nfc(trim(golds[i].custom_input));
    const std::string pred = r.extracted ? nfc(trim(*r.extracted)) : std::string();
    hits[i] = r.extracted.has_value() && pred == gold;
    if (hits[i]) ++s.correct;

    std::map<std::string, int> bag;
    const auto gcp = code_points(gold);
    const auto pcp = code_points(pred);
    for (const auto& c : gcp) ++bag[c];
    for (const auto& c : pcp) {
      if (auto it = bag.find(c); it != bag.end() && it->second > 0) {
        --it->second;
        ++overlap;
      }
    }
    predicted += pcp.size();
    gold_chars += gcp.size();
  }
  s.micro_f1 = round2(micro_f1(std::span<const bool>(hits.get(), s.total)));
  if (overlap > 0) {
    const double p = static_cast<double>(overlap) / static_cast<double>(predicted);
    const double r = static_cast<double>(overlap) / static_cast<double>(gold_chars);
    s.char_overlap_f1 = round2(100.0 * 2 * p * r / (p + r));
  }
  return s;
}

AliasTable AliasTable::from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("alias table must be a JSON object keyed by language");
  AliasTable t;
  for (const auto& [lang, entries] : j.items()) {
    if (!entries.is_object()) throw SchemaError("aliases for '" + lang + "' must be an object");
    auto& m = t.by_language_[to_lower_ascii(lang)];
    for (const auto& [alias, name] : entries.items()) {
      m[to_lower_ascii(nfc(alias))] = name.get<std::string>();
    }
  }
  return t;
}

AliasTable AliasTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open alias table " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw SchemaError("alias table " + path.string() + ": " + e.what());
  }
}

std::optional<std::string> AliasTable::normalize(std::string_view label,
                                                 const OperationRegistry& registry,
                                                 std::string_view lang) const {
  std::string s = strip_quotes(trim(label));
  while (!s.empty() && (s.back() == '.' || s.back() == ',')) s.pop_back();
  s = to_lower_ascii(nfc(trim(s)));
  if (s.empty()) return std::nullopt;
  auto is_intent = [&](const std::string& name) {
    const OperationSpec* op = registry.find(name);
    return op != nullptr && !op->is_logic();
  };
  std::string underscored = s;
  std::replace(underscored.begin(), underscored.end(), ' ', '_');
  for (const auto& candidate : {s, underscored}) {
    if (is_intent(candidate)) return candidate;
  }
  auto lookup = [&](const std::map<std::string, std::string>& m) -> std::optional<std::string> {
    for (const auto& key : {s, underscored}) {
      if (auto it = m.find(key); it != m.end() && is_intent(it->second)) return it->second;
    }
    return std::nullopt;
  };
  if (!lang.empty()) {
    if (auto it = by_language_.find(to_lower_ascii(lang)); it != by_language_.end()) {
      if (auto hit = lookup(it->second)) return hit;
    }
  }
  for (const auto& [code, m] : by_language_) {
    if (auto hit = lookup(m)) return hit;
  }
  return std::nullopt;
}

IntentClassification classify_intent_fewshot(const std::string& question,
                                             const EmbeddedPool& train, EmbeddingProvider& provider,
                                             Backend& backend, const OperationRegistry& registry,
                                             const AliasTable& aliases,
                                             const PromptLibrary& prompts, std::string_view lang,
                                             std::size_t shots) {
  IntentClassification out;
  std::string demos;
  const auto hits = topk_examples(provider.embed_one(question), train, shots);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const auto& ex = train.examples[hits[i].example_ref];
    if (i > 0) demos += "\n";
    demos += "[User Question] " + ex.text + "\n[Operation] " + ex.intent + "\n";
    out.demo_indices.push_back(hits[i].example_ref);
  }
  std::string listing;
  for (const auto& op : registry.operations()) {
    if (op.is_logic()) continue;
    listing += op.description.empty() ? op.name + "\n" : op.name + ": " + op.description + "\n";
  }
  out.prompt = prompts.render(
      "compass_intent", {{"operations", listing}, {"demonstrations", demos}, {"question", question}},
      lang);
  GenerationRequest req;
  req.prompt = out.prompt;
  req.max_new_tokens = 16;
  req.stop_sequences = {"\n"};
  out.raw_output = generate(req, backend).text;
  out.intent = aliases.normalize(out.raw_output, registry, lang);
  return out;
}

}  // namespace xql
