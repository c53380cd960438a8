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

#ifndef FLEXCF_DATA_DATASET_H_
#define FLEXCF_DATA_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flexcf/data/schema.h"

namespace flexcf {

// Rows plus their target labels (class indices; -1 when the target column
// was absent from the source).
struct Dataset {
  Schema schema;
  std::vector<Row> rows;
  std::vector<int> labels;

  std::size_t size() const { return rows.size(); }
  bool has_labels() const { return !labels.empty() && labels.front() >= 0; }
  Dataset Subset(const std::vector<std::size_t>& indices) const;
};

struct CsvOptions {
  // Target column name. Empty: the schema's target when a schema is given,
  // otherwise the last header column.
  std::string target;
  // Cells equal to one of these (after trimming) count as missing.
  std::vector<std::string> missing_tokens = {"", "?"};
  // The target column may be absent when a schema is supplied (inference
  // inputs); labels are then -1.
  bool allow_missing_target = false;
};

struct CsvLoadResult {
  Dataset dataset;
  std::size_t dropped_rows = 0;
};

// Reads a comma-delimited UTF-8 CSV with a header row. Rows containing a
// missing cell are dropped. Without a schema, columns whose every present
// value parses as a number are continuous, all others categorical (sorted
// vocabulary); the target is always categorical.
CsvLoadResult LoadCsv(const std::string& path, const Schema* schema = nullptr,
                      const CsvOptions& options = {});
CsvLoadResult ParseCsv(const std::string& text, const Schema* schema = nullptr,
                       const CsvOptions& options = {});

// Writes rows (and labels, when present) with a header row.
void WriteCsv(const std::string& path, const Dataset& dataset);
std::string FormatCsv(const Dataset& dataset);

// Splits one CSV line into cells; handles double-quoted fields.
std::vector<std::string> SplitCsvLine(const std::string& line);

struct SplitDataset {
  Dataset train;
  Dataset validation;
  Dataset test;
  uint64_t split_seed = 0;
};

// Seeded 60/20/20 permutation split. Requires >= 5 rows.
SplitDataset Split(const Dataset& dataset, uint64_t seed);

// Seeded subsample without replacement; returns the input when it already
// has at most max_rows rows.
Dataset Subsample(const Dataset& dataset, std::size_t max_rows, uint64_t seed);

}  // namespace flexcf

#endif  // FLEXCF_DATA_DATASET_H_
