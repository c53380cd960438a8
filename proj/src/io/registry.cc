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

#include "flexcf/io/registry.h"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "flexcf/common/error.h"

namespace flexcf {

namespace fs = std::filesystem;

nlohmann::json RegistryEntry::ToJson() const {
  return {{"id", id}, {"kind", kind}, {"schema_hash", schema_hash}, {"config", config},
          {"created_at", created_at}, {"checkpoint", checkpoint}, {"links", links}};
}

RegistryEntry RegistryEntry::FromJson(const nlohmann::json& j) {
  RegistryEntry e;
  e.id = j.at("id").get<std::string>();
  e.kind = j.at("kind").get<std::string>();
  e.schema_hash = j.at("schema_hash").get<std::string>();
  e.config = j.value("config", nlohmann::json::object());
  e.created_at = j.value("created_at", "");
  e.checkpoint = j.at("checkpoint").get<std::string>();
  e.links = j.value("links", std::map<std::string, std::string>{});
  return e;
}

Registry Registry::Open(const std::string& dir) {
  Registry r;
  r.dir_ = dir;
  fs::create_directories(dir);
  const fs::path file = fs::path(dir) / "registry.json";
  if (fs::exists(file)) {
    std::ifstream in(file);
    try {
      const auto j = nlohmann::json::parse(in);
      for (const auto& e : j.at("models")) r.entries_.push_back(RegistryEntry::FromJson(e));
    } catch (const nlohmann::json::exception& e) {
      throw UserError("corrupt registry '" + file.string() + "': " + e.what());
    }
  }
  return r;
}

const RegistryEntry* Registry::Find(const std::string& id) const {
  for (const auto& e : entries_) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

const RegistryEntry& Registry::Get(const std::string& id) const {
  const RegistryEntry* e = Find(id);
  if (!e) throw NotFoundError("unknown model '" + id + "'");
  return *e;
}

std::string Registry::CheckpointPath(const RegistryEntry& entry) const {
  const fs::path p(entry.checkpoint);
  return p.is_absolute() ? p.string() : (fs::path(dir_) / p).string();
}

void Registry::Add(RegistryEntry entry) {
  if (entry.id.empty()) throw UserError("registry ids must not be empty");
  if (Find(entry.id)) throw UserError("registry already contains '" + entry.id + "'");
  if (entry.kind != "classifier" && entry.kind != "fcegan" && entry.kind != "critic") {
    throw UserError("unknown registry kind '" + entry.kind + "'");
  }
  for (const auto& [role, target] : entry.links) {
    const RegistryEntry* linked = Find(target);
    if (!linked) throw UserError("link '" + role + "' refers to unknown model '" + target + "'");
    if (linked->schema_hash != entry.schema_hash) {
      throw SchemaError("link '" + role + "' (" + target + ") has a different schema hash");
    }
  }
  if (entry.created_at.empty()) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    entry.created_at = buf;
  }
  entries_.push_back(std::move(entry));
  Save();
}

void Registry::Save() const {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& e : entries_) models.push_back(e.ToJson());
  const fs::path file = fs::path(dir_) / "registry.json";
  const fs::path tmp = fs::path(dir_) / "registry.json.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw UserError("cannot write registry '" + file.string() + "'");
    out << nlohmann::json{{"models", models}}.dump(2) << "\n";
  }
  fs::rename(tmp, file);
}

std::string ResolveRegistryDir(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv(kRegistryEnv); env && *env) return env;
  throw UserError(std::string("no registry given (use --registry or set ") + kRegistryEnv + ")");
}

}  // namespace flexcf
