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

#include "xql/retry.hpp"

#include <cmath>

namespace xql {

std::chrono::milliseconds RetryPolicy::delay_before(int attempt) const {
  const double scale = std::pow(multiplier, attempt - 1);
  return std::chrono::milliseconds(
      static_cast<std::chrono::milliseconds::rep>(initial_delay.count() * scale));
}

}  // namespace xql
