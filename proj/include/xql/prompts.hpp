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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace xql {

using PromptArgs = std::map<std::string, std::string, std::less<>>;

/// Versioned prompt templates read from `<name>.<version>.txt` files, with
/// optional per-language overrides `<name>.<lang>.<version>.txt`. Placeholders
/// use `{name}` syntax; literal braces are doubled.
class PromptLibrary {
 public:
  PromptLibrary() = default;
  static PromptLibrary load(const std::filesystem::path& directory,
                            std::string version = "v1");

  void add(std::string name, std::string text);
  bool contains(std::string_view name) const { return templates_.contains(name); }

  /// Template text; a language override wins when one exists for `lang`
  /// (lower-case code). Throws ConfigError for an unknown name.
  const std::string& get(std::string_view name, std::string_view lang = {}) const;

  /// Throws ConfigError when a placeholder has no argument.
  std::string render(std::string_view name, const PromptArgs& args,
                     std::string_view lang = {}) const;

  const std::string& version() const { return version_; }

 private:
  std::map<std::string, std::string, std::less<>> templates_;
  std::string version_ = "v1";
};

/// Interpolates `{name}` placeholders in an arbitrary template.
std::string render_template(std::string_view text, const PromptArgs& args);

}  // namespace xql
