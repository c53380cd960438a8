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

#include "flexcf/data/encoder.h"

#include <algorithm>
#include <cmath>

#include "flexcf/common/error.h"
#include "flexcf/common/log.h"

namespace flexcf {
namespace {

// Mode-specific scalars cover +-4 standard deviations of their component.
constexpr double kModeScale = 4.0;

std::size_t Argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace

std::string_view TransformModeName(TransformMode mode) {
  return mode == TransformMode::kStandardize ? "standardize" : "gmm";
}

TransformMode ParseTransformMode(std::string_view name) {
  if (name == "standardize") return TransformMode::kStandardize;
  if (name == "gmm") return TransformMode::kGmm;
  throw ConfigError("unknown transform mode '" + std::string(name) + "'");
}

Encoder Encoder::Fit(const Schema& schema, std::span<const Row> rows, TransformMode mode) {
  if (rows.empty()) throw UserError("cannot fit an encoder on zero rows");
  Encoder enc;
  enc.schema_ = schema;
  enc.mode_ = mode;
  const std::size_t c = schema.num_features();
  enc.means_.assign(c, 0.0);
  enc.stds_.assign(c, 1.0);
  enc.ranges_.assign(c, {0.0, 0.0});
  enc.mixtures_.resize(c);
  std::vector<double> column(rows.size());
  for (std::size_t j = 0; j < c; ++j) {
    if (schema.column(j).is_categorical()) continue;
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = rows[i].at(j);
    double sum = 0.0;
    for (double v : column) sum += v;
    const double mean = sum / column.size();
    double var = 0.0;
    for (double v : column) var += (v - mean) * (v - mean);
    var /= column.size();
    enc.means_[j] = mean;
    enc.stds_[j] = std::max(std::sqrt(var), kStdFloor);
    auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    enc.ranges_[j] = {*lo, *hi};
    if (mode == TransformMode::kGmm) {
      if (var < 1e-12) {
        FLEXCF_LOG(kWarning) << "column '" << schema.column(j).name
                             << "' is constant; gmm falls back to a single component";
        enc.mixtures_[j] = GaussianMixture1D::Single(mean, enc.stds_[j]);
      } else {
        enc.mixtures_[j] = GaussianMixture1D::Fit(column);
      }
    }
  }
  enc.BuildLayout();
  return enc;
}

void Encoder::BuildLayout() {
  blocks_.clear();
  std::size_t offset = 0;
  for (std::size_t j = 0; j < schema_.num_features(); ++j) {
    const Column& col = schema_.column(j);
    ColumnBlock block;
    block.column = j;
    block.offset = offset;
    if (col.is_categorical()) {
      block.segments.push_back({offset, col.categories.size(), SegmentKind::kSimplex});
    } else if (mode_ == TransformMode::kStandardize) {
      block.segments.push_back({offset, 1, SegmentKind::kReal});
    } else {
      block.segments.push_back({offset, 1, SegmentKind::kReal});
      block.segments.push_back({offset + 1, mixtures_[j].num_components(), SegmentKind::kSimplex});
    }
    for (const Segment& s : block.segments) block.width += s.width;
    offset += block.width;
    blocks_.push_back(std::move(block));
  }
  width_ = offset;
}

std::vector<double> Encoder::EncodeRow(const Row& row, Rng* rng) const {
  if (row.size() != schema_.num_features()) {
    throw SchemaError("row has " + std::to_string(row.size()) + " values, schema expects " +
                      std::to_string(schema_.num_features()));
  }
  std::vector<double> out(width_, 0.0);
  for (const ColumnBlock& block : blocks_) {
    const Column& col = schema_.column(block.column);
    const double value = row[block.column];
    if (col.is_categorical()) {
      const auto index = static_cast<std::size_t>(value);
      if (value < 0 || index >= col.categories.size() || index != value) {
        throw SchemaError("category index out of range for '" + col.name + "'", col.name);
      }
      out[block.offset + index] = 1.0;
    } else if (mode_ == TransformMode::kStandardize) {
      out[block.offset] = (value - means_[block.column]) / stds_[block.column];
    } else {
      const GaussianMixture1D& gmm = mixtures_[block.column];
      const std::vector<double> resp = gmm.Responsibilities(value);
      std::size_t mode = Argmax(resp);
      if (rng != nullptr) {
        double u = rng->Uniform(), acc = 0.0;
        for (std::size_t k = 0; k < resp.size(); ++k) {
          acc += resp[k];
          if (u < acc) {
            mode = k;
            break;
          }
        }
      }
      const double scalar = (value - gmm.means()[mode]) / (kModeScale * gmm.stds()[mode]);
      out[block.offset] = std::clamp(scalar, -0.99, 0.99);
      out[block.offset + 1 + mode] = 1.0;
    }
  }
  return out;
}

Matrix Encoder::Encode(std::span<const Row> rows, Rng* rng) const {
  Matrix m(rows.size(), width_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::vector<double> enc = EncodeRow(rows[i], rng);
    std::copy(enc.begin(), enc.end(), m.row(i).begin());
  }
  return m;
}

Row Encoder::DecodeRow(std::span<const double> encoded) const {
  if (encoded.size() != width_) {
    throw SchemaError("encoded vector has width " + std::to_string(encoded.size()) +
                      ", encoder expects " + std::to_string(width_));
  }
  Row row(schema_.num_features());
  for (const ColumnBlock& block : blocks_) {
    if (schema_.column(block.column).is_categorical()) {
      row[block.column] = static_cast<double>(Argmax(encoded.subspan(block.offset, block.width)));
    } else if (mode_ == TransformMode::kStandardize) {
      row[block.column] = encoded[block.offset] * stds_[block.column] + means_[block.column];
    } else {
      const GaussianMixture1D& gmm = mixtures_[block.column];
      const std::size_t mode = Argmax(encoded.subspan(block.offset + 1, block.width - 1));
      const double scalar = std::clamp(encoded[block.offset], -1.0, 1.0);
      row[block.column] = scalar * kModeScale * gmm.stds()[mode] + gmm.means()[mode];
    }
  }
  return row;
}

std::vector<Row> Encoder::Decode(const Matrix& encoded) const {
  std::vector<Row> rows;
  rows.reserve(encoded.rows);
  for (std::size_t i = 0; i < encoded.rows; ++i) rows.push_back(DecodeRow(encoded.row(i)));
  return rows;
}

double Encoder::Clamp(std::size_t column, double value) const {
  return std::clamp(value, ranges_.at(column).first, ranges_.at(column).second);
}

nlohmann::json Encoder::ToJson() const {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t j = 0; j < schema_.num_features(); ++j) {
    if (schema_.column(j).is_categorical()) {
      cols.push_back(nullptr);
      continue;
    }
    nlohmann::json c = {{"mean", means_[j]}, {"std", stds_[j]},
                        {"min", ranges_[j].first}, {"max", ranges_[j].second}};
    if (mode_ == TransformMode::kGmm) c["gmm"] = mixtures_[j].ToJson();
    cols.push_back(std::move(c));
  }
  return {{"mode", std::string(TransformModeName(mode_))}, {"columns", std::move(cols)}};
}

Encoder Encoder::FromJson(const nlohmann::json& json, const Schema& schema) {
  Encoder enc;
  enc.schema_ = schema;
  enc.mode_ = ParseTransformMode(json.at("mode").get<std::string>());
  const auto& cols = json.at("columns");
  if (cols.size() != schema.num_features()) throw SchemaError("encoder/schema column mismatch");
  const std::size_t c = schema.num_features();
  enc.means_.assign(c, 0.0);
  enc.stds_.assign(c, 1.0);
  enc.ranges_.assign(c, {0.0, 0.0});
  enc.mixtures_.resize(c);
  for (std::size_t j = 0; j < c; ++j) {
    if (schema.column(j).is_categorical()) continue;
    const auto& cj = cols.at(j);
    enc.means_[j] = cj.at("mean").get<double>();
    enc.stds_[j] = cj.at("std").get<double>();
    enc.ranges_[j] = {cj.at("min").get<double>(), cj.at("max").get<double>()};
    if (enc.mode_ == TransformMode::kGmm) enc.mixtures_[j] = GaussianMixture1D::FromJson(cj.at("gmm"));
  }
  enc.BuildLayout();
  return enc;
}

}  // namespace flexcf
