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

#include "flexcf/cf/template.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flexcf/common/error.h"

namespace flexcf {

std::size_t CounterfactualTemplate::num_mutable() const {
  return static_cast<std::size_t>(std::count(mutable_mask.begin(), mutable_mask.end(), true));
}

CounterfactualTemplate MakeTemplate(const Schema& schema, const Row& instance,
                                    const std::vector<bool>& mutable_mask, int desired_class) {
  if (mutable_mask.size() != schema.num_features() || instance.size() != schema.num_features()) {
    throw SchemaError("template/instance width does not match the schema");
  }
  if (desired_class < 0 || static_cast<std::size_t>(desired_class) >= schema.num_classes()) {
    throw SchemaError("desired class index out of range", "desired_class");
  }
  CounterfactualTemplate tmpl;
  tmpl.mutable_mask = mutable_mask;
  tmpl.desired_class = desired_class;
  tmpl.frozen_values.resize(mutable_mask.size());
  for (std::size_t j = 0; j < mutable_mask.size(); ++j) {
    if (!mutable_mask[j]) tmpl.frozen_values[j] = instance[j];
  }
  return tmpl;
}

CounterfactualTemplate MakeTemplate(const Schema& schema, const Row& instance,
                                    const std::vector<std::string>& mutable_columns,
                                    const std::string& desired_class) {
  std::vector<bool> mask(schema.num_features(), false);
  for (const std::string& name : mutable_columns) mask[schema.ColumnIndex(name)] = true;
  return MakeTemplate(schema, instance, mask, schema.ClassIndex(desired_class));
}

int SampleDesiredClass(std::size_t num_classes, int predicted_class, Rng& rng) {
  if (num_classes < 2) throw UserError("templates need at least 2 target classes");
  if (predicted_class < 0 || static_cast<std::size_t>(predicted_class) >= num_classes) {
    return static_cast<int>(rng.UniformInt(num_classes));
  }
  const int draw = static_cast<int>(rng.UniformInt(num_classes - 1));
  return draw >= predicted_class ? draw + 1 : draw;
}

CounterfactualTemplate SampleTrainingTemplate(const Schema& schema, const Row& instance,
                                              int predicted_class, Rng& rng) {
  const std::size_t c = schema.num_features();
  const double p = rng.Uniform();
  std::vector<bool> mask(c);
  bool any = false;
  for (std::size_t j = 0; j < c; ++j) {
    mask[j] = rng.Bernoulli(p);
    any = any || mask[j];
  }
  if (!any) mask[rng.UniformInt(c)] = true;
  const int desired = SampleDesiredClass(schema.num_classes(), predicted_class, rng);
  return MakeTemplate(schema, instance, mask, desired);
}

CounterfactualTemplate SampleTemplateWithFraction(const Schema& schema, const Row& instance,
                                                  double fraction, int desired_class, Rng& rng) {
  const std::size_t c = schema.num_features();
  auto k = static_cast<std::size_t>(std::llround(std::clamp(fraction, 0.0, 1.0) * c));
  if (fraction > 0.0) k = std::max<std::size_t>(k, 1);
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: the first k entries become the mutable set.
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(order[i], order[i + rng.UniformInt(c - i)]);
  }
  std::vector<bool> mask(c, false);
  for (std::size_t i = 0; i < k; ++i) mask[order[i]] = true;
  return MakeTemplate(schema, instance, mask, desired_class);
}

TemplateEncoding EncodeTemplate(const Encoder& encoder, const CounterfactualTemplate& tmpl,
                                std::span<const double> encoded_original) {
  if (encoded_original.size() != encoder.width()) {
    throw SchemaError("encoded original width mismatch");
  }
  TemplateEncoding out;
  out.masked.assign(encoded_original.begin(), encoded_original.end());
  out.indicator.assign(tmpl.num_features(), 0.0);
  for (const ColumnBlock& block : encoder.blocks()) {
    if (!tmpl.is_mutable(block.column)) continue;
    out.indicator[block.column] = 1.0;
    std::fill_n(out.masked.begin() + static_cast<std::ptrdiff_t>(block.offset), block.width, 0.0);
  }
  out.desired_onehot.assign(encoder.schema().num_classes(), 0.0);
  out.desired_onehot.at(static_cast<std::size_t>(tmpl.desired_class)) = 1.0;
  return out;
}

std::vector<double> MutableDimensionMask(const Encoder& encoder,
                                         const CounterfactualTemplate& tmpl) {
  if (tmpl.num_features() != encoder.blocks().size()) {
    throw SchemaError("template does not match the encoder's columns");
  }
  std::vector<double> mask(encoder.width(), 0.0);
  for (const ColumnBlock& block : encoder.blocks()) {
    if (tmpl.is_mutable(block.column)) {
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(block.offset), block.width, 1.0);
    }
  }
  return mask;
}

std::vector<double> ResetImmutable(const Encoder& encoder, std::span<const double> candidate,
                                   const CounterfactualTemplate& tmpl,
                                   std::span<const double> original) {
  if (candidate.size() != encoder.width() || original.size() != encoder.width() ||
      tmpl.num_features() != encoder.blocks().size()) {
    throw SchemaError("block map mismatch between candidate, original and template");
  }
  std::vector<double> out(candidate.begin(), candidate.end());
  for (const ColumnBlock& block : encoder.blocks()) {
    if (tmpl.is_mutable(block.column)) continue;
    std::copy_n(original.begin() + static_cast<std::ptrdiff_t>(block.offset), block.width,
                out.begin() + static_cast<std::ptrdiff_t>(block.offset));
  }
  return out;
}

Row ResetImmutableRaw(const Row& candidate, const CounterfactualTemplate& tmpl) {
  if (candidate.size() != tmpl.num_features()) throw SchemaError("template/row width mismatch");
  Row out = candidate;
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (!tmpl.mutable_mask[j]) out[j] = *tmpl.frozen_values[j];
  }
  return out;
}

nlohmann::json TemplateToJson(const Schema& schema, const CounterfactualTemplate& tmpl) {
  nlohmann::json mutable_columns = nlohmann::json::array();
  for (std::size_t j = 0; j < tmpl.num_features(); ++j) {
    if (tmpl.mutable_mask[j]) mutable_columns.push_back(schema.column(j).name);
  }
  return {{"mutable", std::move(mutable_columns)},
          {"desired_class", schema.target_classes().at(static_cast<std::size_t>(tmpl.desired_class))}};
}

CounterfactualTemplate TemplateFromJson(const Schema& schema, const nlohmann::json& json,
                                        const Row& instance) {
  if (!json.is_object()) throw SchemaError("template must be a JSON object", "template");
  auto mut = json.find("mutable");
  if (mut == json.end() || !mut->is_array()) {
    throw SchemaError("template.mutable must be an array of column names", "template.mutable");
  }
  std::vector<bool> mask(schema.num_features(), false);
  for (const auto& name : *mut) {
    if (!name.is_string()) throw SchemaError("template.mutable entries must be strings", "template.mutable");
    auto index = schema.FindColumn(name.get<std::string>());
    if (!index) {
      throw SchemaError("unknown column '" + name.get<std::string>() + "'", name.get<std::string>());
    }
    mask[*index] = true;
  }
  auto desired = json.find("desired_class");
  if (desired == json.end() || !desired->is_string()) {
    throw SchemaError("template.desired_class must be a class label", "template.desired_class");
  }
  auto cls = schema.FindClass(desired->get<std::string>());
  if (!cls) {
    throw SchemaError("unknown class '" + desired->get<std::string>() + "'", "template.desired_class");
  }
  return MakeTemplate(schema, instance, mask, *cls);
}

}  // namespace flexcf
