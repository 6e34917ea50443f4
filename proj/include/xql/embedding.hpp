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

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "xql/retry.hpp"

namespace xql {

using EmbeddingVector = std::vector<double>;

/// Turns texts into unit vectors of a fixed dimension.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  /// One unit vector per text, in input order. Empty input gives empty output.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;

  EmbeddingVector embed_one(const std::string& text);
};

/// Scales to unit L2 norm. A zero vector stays zero.
EmbeddingVector normalized(EmbeddingVector v);
double dot(const EmbeddingVector& a, const EmbeddingVector& b);
/// Cosine similarity; 0 when either side is the zero vector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Hashes character trigrams (over NFC code points, ASCII lowercased, with
/// two boundary markers on each side) into `dimension` buckets.
class MockEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit MockEmbeddingProvider(std::size_t dimension = 256) : dimension_(dimension) {}
  std::string id() const override { return "mock-trigram-" + std::to_string(dimension_); }
  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
};

/// Embeddings-style endpoint: POST {"model", "input": [...]} and read
/// data[i].embedding. Key from XQL_EMBED_KEY by default.
struct HttpEmbeddingConfig {
  std::string url;
  std::string model;
  std::string api_key_env = "XQL_EMBED_KEY";
  std::size_t batch_size = 64;
  std::chrono::seconds timeout{60};
  RetryPolicy retry;
  std::function<void(std::chrono::milliseconds)> sleep;
};

class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig config);
  std::string id() const override { return "http:" + config_.model; }
  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

 private:
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;

  HttpEmbeddingConfig config_;
  std::string origin_;
  std::string path_;
  std::string api_key_;
  std::atomic<std::size_t> dimension_{0};  // known after the first response
};

/// Persistent cache in front of another provider. The file holds JSON lines
/// {"provider", "text_hash", "vector"}; lines of other providers are kept
/// but ignored. Many readers, one writer.
class CachedEmbeddingProvider : public EmbeddingProvider {
 public:
  CachedEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner, std::filesystem::path file);

  std::string id() const override { return inner_->id(); }
  std::size_t dimension() const override { return inner_->dimension(); }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

  std::size_t cached() const;
  std::size_t misses() const { return misses_; }

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  std::filesystem::path file_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, EmbeddingVector> cache_;  // sha256(text) -> vector
  std::size_t misses_ = 0;
};

struct LabeledText {
  std::string text;
  std::string intent;
};

struct IntentCentroid {
  std::string intent;
  EmbeddingVector vector;
  int support_count = 0;
};

/// One centroid per distinct intent, sorted by intent name.
std::vector<IntentCentroid> build_centroids(std::span<const LabeledText> examples,
                                            EmbeddingProvider& provider);

struct IntentScore {
  std::string intent;
  double score = 0;
};

/// Top k intents by cosine, ties broken by intent name. Throws
/// std::invalid_argument unless 1 <= k <= centroids.size().
std::vector<IntentScore> topk_intents(const EmbeddingVector& query,
                                      std::span<const IntentCentroid> centroids, std::size_t k);
std::vector<IntentScore> topk_intents(const std::string& query,
                                      std::span<const IntentCentroid> centroids, std::size_t k,
                                      EmbeddingProvider& provider);

struct NeighborHit {
  std::size_t example_ref = 0;
  double score = 0;
  std::string intent;
};

/// A pool with its vectors computed once.
struct EmbeddedPool {
  std::vector<LabeledText> examples;
  std::vector<EmbeddingVector> vectors;

  static EmbeddedPool build(std::vector<LabeledText> examples, EmbeddingProvider& provider);
};

/// min(k, |filtered pool|) hits by descending score, ties by index. Throws
/// std::invalid_argument when the filtered pool is empty or k is 0.
std::vector<NeighborHit> topk_examples(const EmbeddingVector& query, const EmbeddedPool& pool,
                                       std::size_t k,
                                       const std::optional<std::set<std::string>>& intent_filter = {});
std::vector<NeighborHit> topk_examples(const std::string& query,
                                       std::span<const LabeledText> pool, std::size_t k,
                                       EmbeddingProvider& provider,
                                       const std::optional<std::set<std::string>>& intent_filter = {});

struct SimilarityReport {
  std::size_t pairs = 0;
  double mean_cosine = 0;  // in [-1, 1]
  double percent = 0;      // mean * 100, rounded to 2 decimals
  std::string formatted() const;  // "85.29%"
};

SimilarityReport corpus_similarity_report(
    std::span<const std::pair<std::string, std::string>> pairs, EmbeddingProvider& provider);

}  // namespace xql
