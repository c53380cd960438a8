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

#ifndef FLEXCF_CF_TEMPLATE_H_
#define FLEXCF_CF_TEMPLATE_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexcf/common/rng.h"
#include "flexcf/data/encoder.h"
#include "flexcf/data/schema.h"
#include "json.hpp"

namespace flexcf {

// Which features a counterfactual may change, and the class it must reach.
// Immutable columns carry a frozen copy of the original raw value.
struct CounterfactualTemplate {
  std::vector<bool> mutable_mask;                    // per schema column
  std::vector<std::optional<double>> frozen_values;  // set iff !mutable_mask[j]
  int desired_class = 0;

  std::size_t num_features() const { return mutable_mask.size(); }
  std::size_t num_mutable() const;
  bool is_mutable(std::size_t column) const { return mutable_mask.at(column); }
  bool operator==(const CounterfactualTemplate&) const = default;
};

CounterfactualTemplate MakeTemplate(const Schema& schema, const Row& instance,
                                    const std::vector<std::string>& mutable_columns,
                                    const std::string& desired_class);
CounterfactualTemplate MakeTemplate(const Schema& schema, const Row& instance,
                                    const std::vector<bool>& mutable_mask, int desired_class);

// Training-time template: mutable fraction p ~ U[0,1], each column mutable
// with probability p, at least one column mutable; desired class uniform over
// the classes other than `predicted_class`.
CounterfactualTemplate SampleTrainingTemplate(const Schema& schema, const Row& instance,
                                              int predicted_class, Rng& rng);

// Exactly round(fraction * C) mutable columns (at least one when fraction > 0),
// chosen uniformly without replacement.
CounterfactualTemplate SampleTemplateWithFraction(const Schema& schema, const Row& instance,
                                                  double fraction, int desired_class, Rng& rng);

// Desired class uniform over classes != predicted. Requires >= 2 classes.
int SampleDesiredClass(std::size_t num_classes, int predicted_class, Rng& rng);

// Model-space view of a template.
struct TemplateEncoding {
  std::vector<double> masked;     // encoded original, mutable blocks zeroed
  std::vector<double> indicator;  // per column: 1 = mutable
  std::vector<double> desired_onehot;
};

TemplateEncoding EncodeTemplate(const Encoder& encoder, const CounterfactualTemplate& tmpl,
                                std::span<const double> encoded_original);

// 1 on encoded dimensions of mutable columns, 0 elsewhere.
std::vector<double> MutableDimensionMask(const Encoder& encoder, const CounterfactualTemplate& tmpl);

// Copies the original's blocks for every immutable column into the
// candidate. Throws SchemaError when widths disagree with the encoder.
std::vector<double> ResetImmutable(const Encoder& encoder, std::span<const double> candidate,
                                   const CounterfactualTemplate& tmpl,
                                   std::span<const double> original);

// Raw-space counterpart: immutable columns take their frozen values.
Row ResetImmutableRaw(const Row& candidate, const CounterfactualTemplate& tmpl);

// {"mutable": [column...], "desired_class": label}
nlohmann::json TemplateToJson(const Schema& schema, const CounterfactualTemplate& tmpl);
// Frozen values are taken from `instance`. Throws SchemaError naming the
// offending field on unknown columns or classes.
CounterfactualTemplate TemplateFromJson(const Schema& schema, const nlohmann::json& json,
                                        const Row& instance);

}  // namespace flexcf

#endif  // FLEXCF_CF_TEMPLATE_H_
