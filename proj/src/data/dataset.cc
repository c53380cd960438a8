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

#include "flexcf/data/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "flexcf/common/error.h"
#include "flexcf/common/rng.h"

namespace flexcf {
namespace {

std::string Trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

std::string QuoteCsv(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string quoted = "\"";
  for (char c : cell) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace

Dataset Dataset::Subset(const std::vector<std::size_t>& indices) const {
  Dataset out{schema, {}, {}};
  out.rows.reserve(indices.size());
  for (std::size_t i : indices) {
    out.rows.push_back(rows.at(i));
    if (!labels.empty()) out.labels.push_back(labels.at(i));
  }
  return out;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(Trim(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(Trim(cell));
  return cells;
}

CsvLoadResult ParseCsv(const std::string& text, const Schema* schema, const CsvOptions& options) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw UserError("CSV input is empty (header row required)");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::vector<std::string> header = SplitCsvLine(line);

  std::string target = options.target;
  if (target.empty()) target = schema ? schema->target() : header.back();
  std::optional<std::size_t> target_pos;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == target) target_pos = i;
  }
  if (!target_pos && !(schema && options.allow_missing_target)) {
    throw SchemaError("CSV header lacks target column '" + target + "'", target);
  }

  const std::set<std::string> missing(options.missing_tokens.begin(), options.missing_tokens.end());
  std::vector<std::vector<std::string>> records;
  std::size_t dropped = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      throw IngestError("expected " + std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()),
                        line_no - 2);
    }
    bool has_missing = false;
    for (const std::string& cell : cells) has_missing |= missing.count(cell) > 0;
    if (has_missing) {
      ++dropped;
      continue;
    }
    records.push_back(std::move(cells));
  }

  // Header position of every schema feature column.
  std::vector<std::size_t> feature_pos;
  Schema inferred;
  if (schema) {
    for (const Column& col : schema->columns()) {
      auto it = std::find(header.begin(), header.end(), col.name);
      if (it == header.end()) throw SchemaError("CSV lacks column '" + col.name + "'", col.name);
      feature_pos.push_back(static_cast<std::size_t>(it - header.begin()));
    }
  } else {
    std::vector<Column> cols;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i == *target_pos) continue;
      Column col{header[i], ColumnKind::kContinuous, {}};
      bool numeric = true;
      std::set<std::string> vocab;
      for (const auto& rec : records) {
        numeric = numeric && ParseDouble(rec[i]).has_value();
        vocab.insert(rec[i]);
      }
      if (!numeric) {
        col.kind = ColumnKind::kCategorical;
        col.categories.assign(vocab.begin(), vocab.end());
      }
      cols.push_back(std::move(col));
      feature_pos.push_back(i);
    }
    std::set<std::string> classes;
    for (const auto& rec : records) classes.insert(rec[*target_pos]);
    inferred = Schema(std::move(cols), target, {classes.begin(), classes.end()});
    schema = &inferred;
  }

  CsvLoadResult result;
  result.dropped_rows = dropped;
  result.dataset.schema = *schema;
  result.dataset.rows.reserve(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    Row row(schema->num_features());
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string& cell = rec[feature_pos[c]];
      if (schema->column(c).is_categorical()) {
        row[c] = schema->ParseValue(c, cell);  // SchemaError on unknown category
      } else {
        auto value = ParseDouble(cell);
        if (!value || !std::isfinite(*value)) {
          throw IngestError("unparseable continuous value '" + cell + "' in column '" +
                                schema->column(c).name + "'",
                            r);
        }
        row[c] = *value;
      }
    }
    result.dataset.rows.push_back(std::move(row));
    result.dataset.labels.push_back(target_pos ? schema->ClassIndex(rec[*target_pos]) : -1);
  }
  return result;
}

CsvLoadResult LoadCsv(const std::string& path, const Schema* schema, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open CSV file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseCsv(buffer.str(), schema, options);
}

std::string FormatCsv(const Dataset& dataset) {
  const Schema& schema = dataset.schema;
  std::ostringstream out;
  for (std::size_t c = 0; c < schema.num_features(); ++c) {
    out << (c ? "," : "") << QuoteCsv(schema.column(c).name);
  }
  const bool labels = dataset.has_labels();
  if (labels) out << "," << QuoteCsv(schema.target());
  out << "\n";
  for (std::size_t r = 0; r < dataset.rows.size(); ++r) {
    for (std::size_t c = 0; c < schema.num_features(); ++c) {
      out << (c ? "," : "") << QuoteCsv(schema.FormatValue(c, dataset.rows[r][c]));
    }
    if (labels) out << "," << QuoteCsv(schema.target_classes().at(dataset.labels[r]));
    out << "\n";
  }
  return out.str();
}

void WriteCsv(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write CSV file '" + path + "'");
  out << FormatCsv(dataset);
}

SplitDataset Split(const Dataset& dataset, uint64_t seed) {
  const std::size_t n = dataset.size();
  if (n < 5) throw UserError("split needs at least 5 rows, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.Shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::llround(0.6 * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
  auto slice = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(order.begin() + begin, order.begin() + end);
    return dataset.Subset(idx);
  };
  SplitDataset split;
  split.split_seed = seed;
  split.train = slice(0, n_train);
  split.validation = slice(n_train, n_train + n_val);
  split.test = slice(n_train + n_val, n);
  return split;
}

Dataset Subsample(const Dataset& dataset, std::size_t max_rows, uint64_t seed) {
  if (dataset.size() <= max_rows) return dataset;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::Combine(seed, 0x5b5a));
  rng.Shuffle(std::span<std::size_t>(order));
  order.resize(max_rows);
  std::sort(order.begin(), order.end());
  return dataset.Subset(order);
}

}  // namespace flexcf
