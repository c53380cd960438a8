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

#ifndef FLEXCF_DATA_SCHEMA_H_
#define FLEXCF_DATA_SCHEMA_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace flexcf {

enum class ColumnKind { kContinuous, kCategorical };

std::string_view ColumnKindName(ColumnKind kind);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  // Ordered vocabulary; empty for continuous columns.
  std::vector<std::string> categories;

  bool is_categorical() const { return kind == ColumnKind::kCategorical; }
};

// A raw row in schema feature order. Continuous columns hold the value
// itself, categorical columns hold the category index as an exact integer.
using Row = std::vector<double>;

// Column layout of a tabular classification task. Immutable once built; the
// constructor enforces the invariants (>=2 duplicate-free categories per
// categorical column, target not among the features, >=2 classes).
class Schema {
 public:
  Schema() = default;
  Schema(std::vector<Column> features, std::string target,
         std::vector<std::string> target_classes);

  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t index) const { return columns_.at(index); }
  std::size_t num_features() const { return columns_.size(); }
  std::size_t num_categorical() const { return num_categorical_; }
  std::size_t num_continuous() const { return columns_.size() - num_categorical_; }

  const std::string& target() const { return target_; }
  const std::vector<std::string>& target_classes() const { return classes_; }
  std::size_t num_classes() const { return classes_.size(); }

  std::optional<std::size_t> FindColumn(std::string_view name) const;
  // Throws SchemaError naming the column when absent.
  std::size_t ColumnIndex(std::string_view name) const;
  std::optional<int> FindCategory(std::size_t column, std::string_view value) const;
  std::optional<int> FindClass(std::string_view label) const;
  int ClassIndex(std::string_view label) const;

  // Parses a raw cell for `column`. Throws SchemaError on unknown categories
  // and on unparseable continuous values.
  double ParseValue(std::size_t column, std::string_view text) const;
  std::string FormatValue(std::size_t column, double value) const;

  // Row <-> {"column": value} objects. Categorical values are strings,
  // continuous values are numbers (numeric strings are accepted on input).
  nlohmann::json RowToJson(const Row& row) const;
  Row RowFromJson(const nlohmann::json& object) const;

  nlohmann::json ToJson() const;
  static Schema FromJson(const nlohmann::json& json);
  static Schema LoadJsonFile(const std::string& path);
  void SaveJsonFile(const std::string& path) const;

  // Stable 16-hex-digit hash of the canonical JSON form.
  std::string Hash() const;

  bool operator==(const Schema& other) const;

 private:
  std::vector<Column> columns_;
  std::string target_;
  std::vector<std::string> classes_;
  std::size_t num_categorical_ = 0;
  std::unordered_map<std::string, std::size_t> column_index_;
  std::vector<std::unordered_map<std::string, int>> category_index_;
};

// Parses a double from the full string; nullopt on any trailing garbage.
std::optional<double> ParseDouble(std::string_view text);

// Shortest round-trip decimal representation.
std::string FormatDouble(double value);

}  // namespace flexcf

#endif  // FLEXCF_DATA_SCHEMA_H_
