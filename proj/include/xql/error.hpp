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

#include <stdexcept>
#include <string>

namespace xql {

/// Base for every hard error raised by the library. Soft failures (bad
/// parses, decode errors, failed strategies) are values, not exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A gold label that does not parse means the dataset itself is broken.
class CorruptDataError : public Error {
 public:
  using Error::Error;
};

/// Network-level failure. The only error class the HTTP clients retry.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Endpoint answered, but with something we cannot use (4xx, bad JSON, ...).
class BackendError : public Error {
 public:
  using Error::Error;
};

class FixtureMissError : public Error {
 public:
  explicit FixtureMissError(std::string fingerprint)
      : Error("no scripted fixture for prompt fingerprint " + fingerprint),
        fingerprint_(std::move(fingerprint)) {}

  const std::string& fingerprint() const { return fingerprint_; }

 private:
  std::string fingerprint_;
};

class ContextLengthError : public Error {
 public:
  using Error::Error;
};

}  // namespace xql
