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

#include "flexcf/data/schema.h"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "flexcf/common/error.h"

namespace flexcf {

using nlohmann::json;

std::string_view ColumnKindName(ColumnKind kind) {
  return kind == ColumnKind::kContinuous ? "continuous" : "categorical";
}

Schema::Schema(std::vector<Column> features, std::string target,
               std::vector<std::string> target_classes)
    : columns_(std::move(features)),
      target_(std::move(target)),
      classes_(std::move(target_classes)) {
  if (columns_.empty()) throw SchemaError("schema has no feature columns");
  if (classes_.size() < 2) {
    throw SchemaError("target '" + target_ + "' needs at least 2 classes", target_);
  }
  if (std::set<std::string>(classes_.begin(), classes_.end()).size() != classes_.size()) {
    throw SchemaError("duplicate target classes", target_);
  }
  category_index_.resize(columns_.size());
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const Column& col = columns_[i];
    if (col.name == target_) {
      throw SchemaError("target '" + target_ + "' listed among feature columns", target_);
    }
    if (!column_index_.emplace(col.name, i).second) {
      throw SchemaError("duplicate column '" + col.name + "'", col.name);
    }
    if (col.is_categorical()) {
      ++num_categorical_;
      if (col.categories.size() < 2) {
        throw SchemaError("categorical column '" + col.name + "' needs at least 2 categories",
                          col.name);
      }
      for (std::size_t c = 0; c < col.categories.size(); ++c) {
        if (!category_index_[i].emplace(col.categories[c], static_cast<int>(c)).second) {
          throw SchemaError("duplicate category '" + col.categories[c] + "' in '" + col.name + "'",
                            col.name);
        }
      }
    } else if (!col.categories.empty()) {
      throw SchemaError("continuous column '" + col.name + "' lists categories", col.name);
    }
  }
}

std::optional<std::size_t> Schema::FindColumn(std::string_view name) const {
  auto it = column_index_.find(std::string(name));
  if (it == column_index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Schema::ColumnIndex(std::string_view name) const {
  auto index = FindColumn(name);
  if (!index) throw SchemaError("unknown column '" + std::string(name) + "'", std::string(name));
  return *index;
}

std::optional<int> Schema::FindCategory(std::size_t column, std::string_view value) const {
  const auto& index = category_index_.at(column);
  auto it = index.find(std::string(value));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

std::optional<int> Schema::FindClass(std::string_view label) const {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i] == label) return static_cast<int>(i);
  }
  return std::nullopt;
}

int Schema::ClassIndex(std::string_view label) const {
  auto index = FindClass(label);
  if (!index) {
    throw SchemaError("unknown class '" + std::string(label) + "' for target '" + target_ + "'",
                      target_);
  }
  return *index;
}

double Schema::ParseValue(std::size_t column, std::string_view text) const {
  const Column& col = columns_.at(column);
  if (col.is_categorical()) {
    auto index = FindCategory(column, text);
    if (!index) {
      throw SchemaError(
          "unknown category '" + std::string(text) + "' for column '" + col.name + "'", col.name);
    }
    return *index;
  }
  auto value = ParseDouble(text);
  if (!value || !std::isfinite(*value)) {
    throw SchemaError("unparseable value '" + std::string(text) + "' for continuous column '" +
                          col.name + "'",
                      col.name);
  }
  return *value;
}

std::string Schema::FormatValue(std::size_t column, double value) const {
  const Column& col = columns_.at(column);
  if (col.is_categorical()) return col.categories.at(static_cast<std::size_t>(value));
  return FormatDouble(value);
}

json Schema::RowToJson(const Row& row) const {
  json object = json::object();
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].is_categorical()) {
      object[columns_[i].name] = columns_[i].categories.at(static_cast<std::size_t>(row.at(i)));
    } else {
      object[columns_[i].name] = row.at(i);
    }
  }
  return object;
}

Row Schema::RowFromJson(const json& object) const {
  if (!object.is_object()) throw SchemaError("instance must be a JSON object", "instance");
  for (const auto& [key, value] : object.items()) {
    if (!FindColumn(key) && key != target_) {
      throw SchemaError("unknown column '" + key + "'", key);
    }
  }
  Row row(columns_.size());
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const Column& col = columns_[i];
    auto it = object.find(col.name);
    if (it == object.end()) throw SchemaError("missing column '" + col.name + "'", col.name);
    if (col.is_categorical()) {
      if (!it->is_string()) {
        throw SchemaError("column '" + col.name + "' expects a category string", col.name);
      }
      row[i] = ParseValue(i, it->get<std::string>());
    } else if (it->is_number()) {
      row[i] = it->get<double>();
      if (!std::isfinite(row[i])) throw SchemaError("non-finite value", col.name);
    } else if (it->is_string()) {
      row[i] = ParseValue(i, it->get<std::string>());
    } else {
      throw SchemaError("column '" + col.name + "' expects a number", col.name);
    }
  }
  return row;
}

json Schema::ToJson() const {
  json cols = json::array();
  for (const Column& col : columns_) {
    json entry = {{"name", col.name}, {"kind", std::string(ColumnKindName(col.kind))}};
    if (col.is_categorical()) entry["categories"] = col.categories;
    cols.push_back(std::move(entry));
  }
  return {{"columns", std::move(cols)}, {"target", target_}, {"target_classes", classes_}};
}

Schema Schema::FromJson(const json& j) {
  try {
    std::vector<Column> cols;
    for (const json& entry : j.at("columns")) {
      Column col;
      col.name = entry.at("name").get<std::string>();
      const std::string kind = entry.at("kind").get<std::string>();
      if (kind == "continuous") {
        col.kind = ColumnKind::kContinuous;
      } else if (kind == "categorical") {
        col.kind = ColumnKind::kCategorical;
        col.categories = entry.at("categories").get<std::vector<std::string>>();
      } else {
        throw SchemaError("unknown column kind '" + kind + "'", col.name);
      }
      cols.push_back(std::move(col));
    }
    return Schema(std::move(cols), j.at("target").get<std::string>(),
                  j.at("target_classes").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema JSON: ") + e.what());
  }
}

Schema Schema::LoadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open schema file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError("schema file '" + path + "' is not valid JSON: " + e.what());
  }
  return FromJson(j);
}

void Schema::SaveJsonFile(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw UserError("cannot write schema file '" + path + "'");
  out << ToJson().dump(2) << "\n";
}

std::string Schema::Hash() const {
  // FNV-1a over the canonical (key-sorted, compact) JSON dump.
  const std::string canonical = ToJson().dump();
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

bool Schema::operator==(const Schema& other) const { return ToJson() == other.ToJson(); }

std::optional<double> ParseDouble(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::string FormatDouble(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

}  // namespace flexcf
