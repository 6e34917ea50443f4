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

#include "xql/prompts.hpp"

#include <fmt/args.h>
#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "xql/error.hpp"

namespace xql {

std::string render_template(std::string_view text, const PromptArgs& args) {
  fmt::dynamic_format_arg_store<fmt::format_context> store;
  for (const auto& [name, value] : args) store.push_back(fmt::arg(name.c_str(), value));
  try {
    return fmt::vformat(fmt::string_view(text.data(), text.size()), store);
  } catch (const fmt::format_error& e) {
    throw ConfigError(std::string("prompt template: ") + e.what());
  }
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& directory, std::string version) {
  if (!std::filesystem::is_directory(directory)) {
    throw ConfigError("prompt directory not found: " + directory.string());
  }
  PromptLibrary lib;
  lib.version_ = version;
  const std::string suffix = "." + version + ".txt";
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    const std::string file = entry.path().filename().string();
    if (!entry.is_regular_file() || !file.ends_with(suffix)) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (text.ends_with('\n')) text.pop_back();
    lib.templates_[file.substr(0, file.size() - suffix.size())] = std::move(text);
  }
  return lib;
}

void PromptLibrary::add(std::string name, std::string text) {
  templates_[std::move(name)] = std::move(text);
}

const std::string& PromptLibrary::get(std::string_view name, std::string_view lang) const {
  if (!lang.empty()) {
    const std::string key = std::string(name) + "." + std::string(lang);
    if (auto it = templates_.find(key); it != templates_.end()) return it->second;
  }
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ConfigError("no prompt template named " + std::string(name));
  return it->second;
}

std::string PromptLibrary::render(std::string_view name, const PromptArgs& args,
                                  std::string_view lang) const {
  return render_template(get(name, lang), args);
}

}  // namespace xql
