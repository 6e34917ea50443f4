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

#include <chrono>
#include <functional>
#include <thread>

#include "xql/error.hpp"

namespace xql {

/// Exponential backoff for transport failures only. Semantic errors
/// propagate on the first attempt.
struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_delay{500};
  double multiplier = 2.0;

  std::chrono::milliseconds delay_before(int attempt) const;
};

template <class F>
auto with_retries(const RetryPolicy& policy, F&& attempt_fn,
                  const std::function<void(std::chrono::milliseconds)>& sleep =
                      [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
    -> decltype(attempt_fn()) {
  for (int attempt = 1;; ++attempt) {
    try {
      return attempt_fn();
    } catch (const TransportError&) {
      if (attempt >= policy.max_attempts) throw;
      sleep(policy.delay_before(attempt));
    }
  }
}

}  // namespace xql
