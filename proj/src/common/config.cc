/*
 * Copyright 2026 The flexcf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "flexcf/common/config.h"

#include <fstream>
#include <sstream>

#include "flexcf/common/error.h"

namespace flexcf {

namespace {

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

nlohmann::json ParseValue(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    return text;
  }
}

}  // namespace

void AddOverride(ConfigOverrides& overrides, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("config entry '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string key = Trim(assignment.substr(0, eq));
  if (key.empty() || key.find('.') == std::string::npos) {
    throw ConfigError("config key '" + key + "' must look like section.key");
  }
  overrides[key] = Trim(assignment.substr(eq + 1));
}

ConfigOverrides ParseConfigText(std::string_view text, const std::string& source) {
  ConfigOverrides out;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string content = Trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (content.empty()) continue;
    try {
      AddOverride(out, content);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

ConfigOverrides LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseConfigText(buffer.str(), path);
}

nlohmann::json ApplyOverrides(nlohmann::json base, const std::string& section, const ConfigOverrides& overrides,
                              std::set<std::string>* consumed) {
  const std::string prefix = section + ".";
  for (const auto& [key, value] : overrides) {
    if (key.compare(0, prefix.size(), prefix) != 0) continue;
    const std::string field = key.substr(prefix.size());
    if (!base.contains(field)) throw ConfigError("unknown config key '" + key + "'");
    base[field] = ParseValue(value);
    if (consumed) consumed->insert(key);
  }
  return base;
}

void RequireConsumed(const ConfigOverrides& overrides, const std::set<std::string>& consumed) {
  for (const auto& [key, value] : overrides) {
    if (!consumed.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
}

}  // namespace flexcf
