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

#include <span>
#include <string>
#include <vector>

namespace xql {

/// Micro-F1 in percent over single-label outcomes. With one prediction per
/// instance precision, recall, and accuracy coincide. Empty input gives 0.
double micro_f1(std::span<const bool> correct);
double micro_f1(std::span<const std::string> predictions, std::span<const std::string> golds);

/// Rounds a percentage to two decimals.
double round2(double value);

}  // namespace xql
