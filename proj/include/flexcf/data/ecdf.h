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

#ifndef FLEXCF_DATA_ECDF_H_
#define FLEXCF_DATA_ECDF_H_

#include <cstddef>
#include <span>
#include <vector>

#include "flexcf/data/schema.h"
#include "json.hpp"

namespace flexcf {

// Per-column empirical CDF of the training split, evaluated with mid-rank
// tie handling: (count_less + 0.5 * count_equal) / n.
class EmpiricalCdf {
 public:
  EmpiricalCdf() = default;
  static EmpiricalCdf Fit(const Schema& schema, std::span<const Row> rows);

  // Throws SchemaError when `column` is not a fitted continuous column.
  double Evaluate(std::size_t column, double value) const;

  bool has_column(std::size_t column) const {
    return column < sorted_.size() && !sorted_[column].empty();
  }
  const std::vector<double>& sorted_values(std::size_t column) const { return sorted_.at(column); }

  nlohmann::json ToJson() const;
  static EmpiricalCdf FromJson(const nlohmann::json& json);

 private:
  // Indexed by schema column; empty for categorical columns.
  std::vector<std::vector<double>> sorted_;
};

}  // namespace flexcf

#endif  // FLEXCF_DATA_ECDF_H_
