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

#ifndef FLEXCF_DATA_ENCODER_H_
#define FLEXCF_DATA_ENCODER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "flexcf/common/rng.h"
#include "flexcf/data/gmm.h"
#include "flexcf/data/matrix.h"
#include "flexcf/data/schema.h"
#include "json.hpp"

namespace flexcf {

enum class TransformMode { kStandardize, kGmm };

std::string_view TransformModeName(TransformMode mode);
TransformMode ParseTransformMode(std::string_view name);

// A contiguous run of encoded dimensions. Real segments hold free scalars,
// simplex segments hold one-hot (or softmax) category / mode indicators.
enum class SegmentKind { kReal, kSimplex };

struct Segment {
  std::size_t offset = 0;
  std::size_t width = 0;
  SegmentKind kind = SegmentKind::kReal;
};

// Encoded span of one schema column.
struct ColumnBlock {
  std::size_t column = 0;
  std::size_t offset = 0;
  std::size_t width = 0;
  std::vector<Segment> segments;
};

inline constexpr double kStdFloor = 1e-8;

// Reversible map between raw rows and model-space vectors.
//  standardize: continuous -> (x - mean) / max(std, 1e-8), width 1.
//  gmm:         continuous -> [in-mode scalar, one-hot mode], width 1 + modes.
//  categorical -> one-hot in both modes.
// Immutable after Fit; safe for concurrent use.
class Encoder {
 public:
  Encoder() = default;

  // Fit on training rows only.
  static Encoder Fit(const Schema& schema, std::span<const Row> rows,
                     TransformMode mode = TransformMode::kStandardize);

  const Schema& schema() const { return schema_; }
  TransformMode mode() const { return mode_; }
  std::size_t width() const { return width_; }
  const std::vector<ColumnBlock>& blocks() const { return blocks_; }
  const ColumnBlock& block(std::size_t column) const { return blocks_.at(column); }

  // gmm mode samples the mode from the responsibilities when `rng` is given,
  // and takes the most responsible mode otherwise.
  std::vector<double> EncodeRow(const Row& row, Rng* rng = nullptr) const;
  Matrix Encode(std::span<const Row> rows, Rng* rng = nullptr) const;

  // Hard decode: argmax on simplex segments, clipping of gmm scalars.
  Row DecodeRow(std::span<const double> encoded) const;
  std::vector<Row> Decode(const Matrix& encoded) const;

  // Observed training range of a continuous column.
  double min(std::size_t column) const { return ranges_.at(column).first; }
  double max(std::size_t column) const { return ranges_.at(column).second; }
  double Clamp(std::size_t column, double value) const;

  double mean(std::size_t column) const { return means_.at(column); }
  double stddev(std::size_t column) const { return stds_.at(column); }
  const GaussianMixture1D& mixture(std::size_t column) const { return mixtures_.at(column); }

  nlohmann::json ToJson() const;
  static Encoder FromJson(const nlohmann::json& json, const Schema& schema);

 private:
  void BuildLayout();

  Schema schema_;
  TransformMode mode_ = TransformMode::kStandardize;
  std::size_t width_ = 0;
  std::vector<ColumnBlock> blocks_;
  // Indexed by column; unused entries for categorical columns.
  std::vector<double> means_;
  std::vector<double> stds_;
  std::vector<std::pair<double, double>> ranges_;
  std::vector<GaussianMixture1D> mixtures_;
};

}  // namespace flexcf

#endif  // FLEXCF_DATA_ENCODER_H_
