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

#ifndef FLEXCF_IO_REGISTRY_H_
#define FLEXCF_IO_REGISTRY_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace flexcf {

inline constexpr const char* kRegistryEnv = "FLEXCF_REGISTRY";

struct RegistryEntry {
  std::string id;
  std::string kind;  // classifier | fcegan | critic
  std::string schema_hash;
  nlohmann::json config = nlohmann::json::object();
  std::string created_at;
  // Relative to the registry directory unless absolute.
  std::string checkpoint;
  // Role -> entry id, e.g. {"classifier": "adult-clf", "critic": "adult-critic"}.
  std::map<std::string, std::string> links;

  nlohmann::json ToJson() const;
  static RegistryEntry FromJson(const nlohmann::json& json);
};

// Directory holding registry.json plus checkpoints.
class Registry {
 public:
  // Creates the directory when missing.
  static Registry Open(const std::string& dir);

  const std::string& dir() const { return dir_; }
  const std::vector<RegistryEntry>& entries() const { return entries_; }
  const RegistryEntry* Find(const std::string& id) const;
  // Throws NotFoundError.
  const RegistryEntry& Get(const std::string& id) const;
  std::string CheckpointPath(const RegistryEntry& entry) const;

  // Rejects duplicate ids, unknown kinds, dangling links and links whose
  // schema hash differs. Fills created_at when empty. Persists immediately.
  void Add(RegistryEntry entry);

 private:
  void Save() const;
  std::string dir_;
  std::vector<RegistryEntry> entries_;
};

// --registry value, else $FLEXCF_REGISTRY; throws UserError when neither is set.
std::string ResolveRegistryDir(const std::optional<std::string>& flag);

}  // namespace flexcf

#endif  // FLEXCF_IO_REGISTRY_H_
