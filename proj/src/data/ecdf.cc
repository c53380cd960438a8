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

#include "flexcf/data/ecdf.h"

#include <algorithm>

#include "flexcf/common/error.h"

namespace flexcf {

EmpiricalCdf EmpiricalCdf::Fit(const Schema& schema, std::span<const Row> rows) {
  if (rows.empty()) throw UserError("cannot fit an empirical cdf on zero rows");
  EmpiricalCdf cdf;
  cdf.sorted_.resize(schema.num_features());
  for (std::size_t j = 0; j < schema.num_features(); ++j) {
    if (schema.column(j).is_categorical()) continue;
    auto& values = cdf.sorted_[j];
    values.reserve(rows.size());
    for (const Row& row : rows) values.push_back(row.at(j));
    std::sort(values.begin(), values.end());
  }
  return cdf;
}

double EmpiricalCdf::Evaluate(std::size_t column, double value) const {
  if (!has_column(column)) {
    throw SchemaError("no empirical cdf for column " + std::to_string(column));
  }
  const auto& values = sorted_[column];
  const auto lower = std::lower_bound(values.begin(), values.end(), value);
  const auto upper = std::upper_bound(lower, values.end(), value);
  const double less = static_cast<double>(lower - values.begin());
  const double equal = static_cast<double>(upper - lower);
  return (less + 0.5 * equal) / static_cast<double>(values.size());
}

nlohmann::json EmpiricalCdf::ToJson() const { return {{"sorted", sorted_}}; }

EmpiricalCdf EmpiricalCdf::FromJson(const nlohmann::json& json) {
  EmpiricalCdf cdf;
  cdf.sorted_ = json.at("sorted").get<std::vector<std::vector<double>>>();
  return cdf;
}

}  // namespace flexcf
