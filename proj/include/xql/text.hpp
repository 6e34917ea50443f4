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

#include <string>
#include <string_view>

namespace xql {

/// Unicode NFC normalisation of UTF-8 text. Invalid UTF-8 is passed through
/// unchanged.
std::string nfc(std::string_view text);

/// Strips ASCII whitespace from both ends.
std::string_view trim(std::string_view text);

std::string to_lower_ascii(std::string_view text);

/// Number of Unicode code points in valid UTF-8.
std::size_t utf8_length(std::string_view text);

/// First 128 bits of SHA-256, as 32 lowercase hex characters.
std::string fingerprint128(std::string_view text);

/// Full SHA-256 in hex; used for cache keys.
std::string sha256_hex(std::string_view text);

}  // namespace xql
