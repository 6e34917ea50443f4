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

#include "xql/metrics.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace xql {

double micro_f1(std::span<const bool> correct) {
  if (correct.empty()) return 0.0;
  std::size_t tp = 0;
  for (bool c : correct) tp += c ? 1 : 0;
  // Each instance yields exactly one prediction and one gold label, so
  // tp + fp = tp + fn = N.
  const double n = static_cast<double>(correct.size());
  const double precision = tp / n;
  const double recall = tp / n;
  if (precision + recall == 0) return 0.0;
  return 100.0 * 2 * precision * recall / (precision + recall);
}

double micro_f1(std::span<const std::string> predictions, std::span<const std::string> golds) {
  if (predictions.size() != golds.size()) {
    throw std::invalid_argument("predictions and golds differ in length");
  }
  const std::size_t n = predictions.size();
  std::unique_ptr<bool[]> outcome(new bool[n]);
  for (std::size_t i = 0; i < n; ++i) outcome[i] = predictions[i] == golds[i];
  return micro_f1(std::span<const bool>(outcome.get(), n));
}

double round2(double value) { return std::round(value * 100.0) / 100.0; }

}  // namespace xql
