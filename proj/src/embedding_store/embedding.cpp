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

#include "xql/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "xql/error.hpp"
#include "xql/text.hpp"

namespace xql {
namespace {

using nlohmann::json;

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

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

EmbeddingVector EmbeddingProvider::embed_one(const std::string& text) {
  auto out = embed(std::span<const std::string>(&text, 1));
  return std::move(out.at(0));
}

EmbeddingVector normalized(EmbeddingVector v) {
  double norm = 0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0) return v;
  for (double& x : v) x /= norm;
  return v;
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("embedding dimensions differ");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0 || nb == 0) return 0;
  return dot(a, b) / (na * nb);
}

std::vector<EmbeddingVector> MockEmbeddingProvider::embed(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<std::string> cps{"\x02", "\x02"};
    for (auto& cp : code_points(to_lower_ascii(nfc(text)))) cps.push_back(std::move(cp));
    cps.insert(cps.end(), {"\x03", "\x03"});
    EmbeddingVector v(dimension_, 0.0);
    for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
      const std::string gram = cps[i] + cps[i + 1] + cps[i + 2];
      v[fnv1a(gram) % dimension_] += 1.0;
    }
    out.push_back(normalized(std::move(v)));
  }
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig config)
    : config_(std::move(config)) {
  const auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("embedding url needs a scheme: " + config_.url);
  }
  const auto path_start = config_.url.find('/', scheme_end + 3);
  origin_ = config_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  if (config_.batch_size == 0) config_.batch_size = 1;
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed_batch(
    std::span<const std::string> texts) const {
  const std::string payload =
      json{{"model", config_.model}, {"input", std::vector<std::string>(texts.begin(), texts.end())}}
          .dump();
  auto attempt = [&]() -> json {
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) throw TransportError("POST " + config_.url + " failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500) {
      throw TransportError("POST " + config_.url + " returned " + std::to_string(res->status));
    }
    if (res->status >= 400) {
      throw BackendError("POST " + config_.url + " returned " + std::to_string(res->status));
    }
    try {
      return json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw BackendError(std::string("unparseable embedding response: ") + e.what());
    }
  };
  auto sleep = config_.sleep ? config_.sleep : [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
  const json response = with_retries(config_.retry, attempt, sleep);
  const auto data = response.find("data");
  if (data == response.end() || !data->is_array() || data->size() != texts.size()) {
    throw BackendError("embedding response must carry one data entry per input");
  }
  std::vector<EmbeddingVector> out(texts.size());
  for (const auto& item : *data) {
    const std::size_t index = item.value("index", static_cast<std::size_t>(&item - &(*data)[0]));
    if (index >= out.size()) throw BackendError("embedding index out of range");
    out[index] = normalized(item.at("embedding").get<EmbeddingVector>());
  }
  return out;
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += config_.batch_size) {
    auto batch = embed_batch(texts.subspan(i, std::min(config_.batch_size, texts.size() - i)));
    for (auto& v : batch) out.push_back(std::move(v));
  }
  if (!out.empty()) {
    const std::size_t dim = out.front().size();
    std::size_t expected = 0;
    if (!dimension_.compare_exchange_strong(expected, dim) && expected != dim) {
      throw BackendError("embedding dimension changed between calls");
    }
    for (const auto& v : out) {
      if (v.size() != dim) throw BackendError("embedding dimension varies within a response");
    }
  }
  return out;
}

CachedEmbeddingProvider::CachedEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner,
                                                 std::filesystem::path file)
    : inner_(std::move(inner)), file_(std::move(file)) {
  std::ifstream in(file_);
  std::string line;
  std::size_t lineno = 0;
  const std::string provider = inner_->id();
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw CorruptDataError("embedding cache " + file_.string() + " line " +
                             std::to_string(lineno) + " is not JSON");
    }
    if (j.value("provider", std::string{}) != provider) continue;
    cache_[j.at("text_hash").get<std::string>()] = j.at("vector").get<EmbeddingVector>();
  }
}

std::size_t CachedEmbeddingProvider::cached() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

std::vector<EmbeddingVector> CachedEmbeddingProvider::embed(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::string> hashes(texts.size());
  std::vector<std::size_t> missing;
  {
    std::shared_lock lock(mutex_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      hashes[i] = sha256_hex(texts[i]);
      if (auto it = cache_.find(hashes[i]); it != cache_.end()) {
        out[i] = it->second;
      } else {
        missing.push_back(i);
      }
    }
  }
  if (missing.empty()) return out;

  std::vector<std::string> todo;
  for (std::size_t i : missing) todo.push_back(texts[i]);
  auto fresh = inner_->embed(todo);

  std::unique_lock lock(mutex_);
  if (!file_.parent_path().empty()) std::filesystem::create_directories(file_.parent_path());
  std::ofstream append(file_, std::ios::app);
  const std::string provider = inner_->id();
  for (std::size_t n = 0; n < missing.size(); ++n) {
    const std::size_t i = missing[n];
    out[i] = fresh[n];
    if (cache_.emplace(hashes[i], fresh[n]).second) {
      ++misses_;
      append << json{{"provider", provider}, {"text_hash", hashes[i]}, {"vector", fresh[n]}}.dump()
             << '\n';
    }
  }
  return out;
}

std::vector<IntentCentroid> build_centroids(std::span<const LabeledText> examples,
                                            EmbeddingProvider& provider) {
  if (examples.empty()) throw std::invalid_argument("build_centroids needs at least one example");
  std::vector<std::string> texts;
  for (const auto& e : examples) texts.push_back(e.text);
  const auto vectors = provider.embed(texts);
  std::map<std::string, IntentCentroid> sums;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto& c = sums[examples[i].intent];
    if (c.vector.empty()) {
      c.intent = examples[i].intent;
      c.vector.assign(vectors[i].size(), 0.0);
    }
    for (std::size_t d = 0; d < vectors[i].size(); ++d) c.vector[d] += vectors[i][d];
    ++c.support_count;
  }
  std::vector<IntentCentroid> out;
  for (auto& [name, c] : sums) {
    for (double& x : c.vector) x /= c.support_count;
    c.vector = normalized(std::move(c.vector));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<IntentScore> topk_intents(const EmbeddingVector& query,
                                      std::span<const IntentCentroid> centroids, std::size_t k) {
  if (k < 1 || k > centroids.size()) {
    throw std::invalid_argument("k must be between 1 and the number of centroids");
  }
  std::vector<IntentScore> scores;
  for (const auto& c : centroids) scores.push_back({c.intent, cosine(query, c.vector)});
  std::sort(scores.begin(), scores.end(), [](const IntentScore& a, const IntentScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.intent < b.intent;
  });
  scores.resize(k);
  return scores;
}

std::vector<IntentScore> topk_intents(const std::string& query,
                                      std::span<const IntentCentroid> centroids, std::size_t k,
                                      EmbeddingProvider& provider) {
  return topk_intents(provider.embed_one(query), centroids, k);
}

EmbeddedPool EmbeddedPool::build(std::vector<LabeledText> examples, EmbeddingProvider& provider) {
  EmbeddedPool pool;
  std::vector<std::string> texts;
  for (const auto& e : examples) texts.push_back(e.text);
  pool.vectors = provider.embed(texts);
  pool.examples = std::move(examples);
  return pool;
}

std::vector<NeighborHit> topk_examples(const EmbeddingVector& query, const EmbeddedPool& pool,
                                       std::size_t k,
                                       const std::optional<std::set<std::string>>& intent_filter) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  std::vector<NeighborHit> hits;
  for (std::size_t i = 0; i < pool.examples.size(); ++i) {
    const auto& intent = pool.examples[i].intent;
    if (intent_filter && !intent_filter->contains(intent)) continue;
    hits.push_back({i, cosine(query, pool.vectors[i]), intent});
  }
  if (hits.empty()) throw std::invalid_argument("example pool is empty after filtering");
  std::sort(hits.begin(), hits.end(), [](const NeighborHit& a, const NeighborHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.example_ref < b.example_ref;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

std::vector<NeighborHit> topk_examples(const std::string& query,
                                       std::span<const LabeledText> pool, std::size_t k,
                                       EmbeddingProvider& provider,
                                       const std::optional<std::set<std::string>>& intent_filter) {
  const auto embedded =
      EmbeddedPool::build(std::vector<LabeledText>(pool.begin(), pool.end()), provider);
  return topk_examples(provider.embed_one(query), embedded, k, intent_filter);
}

std::string SimilarityReport::formatted() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", percent);
  return buf;
}

SimilarityReport corpus_similarity_report(
    std::span<const std::pair<std::string, std::string>> pairs, EmbeddingProvider& provider) {
  if (pairs.empty()) throw std::invalid_argument("similarity report needs at least one pair");
  std::vector<std::string> left, right;
  for (const auto& [a, b] : pairs) {
    left.push_back(a);
    right.push_back(b);
  }
  const auto va = provider.embed(left);
  const auto vb = provider.embed(right);
  double total = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) total += cosine(va[i], vb[i]);
  SimilarityReport r;
  r.pairs = pairs.size();
  r.mean_cosine = total / static_cast<double>(pairs.size());
  r.percent = std::round(r.mean_cosine * 10000.0) / 100.0;
  return r;
}

}  // namespace xql
