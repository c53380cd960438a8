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

#ifndef FLEXCF_COMMON_CONFIG_H_
#define FLEXCF_COMMON_CONFIG_H_

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "json.hpp"

namespace flexcf {

// Key-value configuration, one `section.key = value` per line; `#` starts
// a comment. Values are JSON literals (numbers, true/false, [a, b]) or bare
// strings. Later entries win.
using ConfigOverrides = std::map<std::string, std::string>;

ConfigOverrides ParseConfigText(std::string_view text, const std::string& source = "<config>");
ConfigOverrides LoadConfigFile(const std::string& path);
// "section.key=value"
void AddOverride(ConfigOverrides& overrides, std::string_view assignment);

// Applies every `<section>.<key>` override to the matching key of `base`
// and records it in `consumed`. Throws ConfigError for keys absent from base.
nlohmann::json ApplyOverrides(nlohmann::json base, const std::string& section, const ConfigOverrides& overrides,
                              std::set<std::string>* consumed = nullptr);

// Throws ConfigError naming the first override not in `consumed`.
void RequireConsumed(const ConfigOverrides& overrides, const std::set<std::string>& consumed);

}  // namespace flexcf

#endif  // FLEXCF_COMMON_CONFIG_H_
