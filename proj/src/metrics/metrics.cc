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

#include "flexcf/metrics/metrics.h"

#include <algorithm>
#include <cmath>

#include "flexcf/common/error.h"

namespace flexcf {
namespace {

nlohmann::json OptionalToJson(const std::optional<double>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

std::optional<double> OptionalFromJson(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

struct Accumulator {
  double sum = 0.0;
  std::size_t count = 0;
  void Add(double v) {
    sum += v;
    ++count;
  }
  std::optional<double> Mean() const {
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  }
};

}  // namespace

std::optional<double> CategoriesChanged(const Schema& schema, const Row& a, const Row& b) {
  if (schema.num_categorical() == 0) return std::nullopt;
  std::size_t changed = 0;
  for (std::size_t j = 0; j < schema.num_features(); ++j) {
    if (schema.column(j).is_categorical() && a.at(j) != b.at(j)) ++changed;
  }
  return static_cast<double>(changed) / static_cast<double>(schema.num_categorical());
}

std::optional<PercentileShift> PercentileShifts(const Schema& schema, const EmpiricalCdf& cdf,
                                                const Row& a, const Row& b) {
  if (schema.num_continuous() == 0) return std::nullopt;
  PercentileShift shift;
  for (std::size_t j = 0; j < schema.num_features(); ++j) {
    if (schema.column(j).is_categorical()) continue;
    const double d = std::abs(cdf.Evaluate(j, b.at(j)) - cdf.Evaluate(j, a.at(j)));
    shift.mean += d;
    shift.max = std::max(shift.max, d);
  }
  shift.mean /= static_cast<double>(schema.num_continuous());
  return shift;
}

Diversity ComputeDiversity(const Schema& schema, const EmpiricalCdf& cdf,
                           std::span<const Row> candidates) {
  Accumulator cat, cont;
  Diversity out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t k = i + 1; k < candidates.size(); ++k) {
      if (candidates[i] == candidates[k]) continue;
      ++out.pairs;
      if (auto c = CategoriesChanged(schema, candidates[i], candidates[k])) cat.Add(*c);
      if (auto p = PercentileShifts(schema, cdf, candidates[i], candidates[k])) cont.Add(p->mean);
    }
  }
  out.categorical = cat.Mean();
  out.continuous = cont.Mean();
  return out;
}

FakenessReference ComputeFakenessReference(const FakenessScorer& scorer,
                                           std::span<const Row> real_rows) {
  FakenessReference ref;
  const std::vector<double> scores = scorer.Score(real_rows);
  ref.count = scores.size();
  if (scores.empty()) return ref;
  for (double s : scores) ref.mean += s;
  ref.mean /= static_cast<double>(scores.size());
  for (double s : scores) ref.std += (s - ref.mean) * (s - ref.mean);
  ref.std = std::sqrt(ref.std / static_cast<double>(scores.size()));
  return ref;
}

const std::vector<std::string>& MetricNames() {
  static const std::vector<std::string> names = {
      "valid_fraction",        "mean_counterfactual_prediction", "categories_changed",
      "mean_percentile_shift", "max_percentile_shift",           "fakeness",
      "categorical_diversity", "continuous_diversity"};
  return names;
}

std::optional<double> MetricsReport::Get(const std::string& metric) const {
  if (metric == "valid_fraction") return valid_fraction;
  if (metric == "mean_counterfactual_prediction") return mean_counterfactual_prediction;
  if (metric == "categories_changed") return categories_changed;
  if (metric == "mean_percentile_shift") return mean_percentile_shift;
  if (metric == "max_percentile_shift") return max_percentile_shift;
  if (metric == "fakeness") return fakeness;
  if (metric == "categorical_diversity") return categorical_diversity;
  if (metric == "continuous_diversity") return continuous_diversity;
  throw UserError("unknown metric '" + metric + "'");
}

nlohmann::json MetricsReport::ToJson() const {
  nlohmann::json j;
  j["num_instances"] = num_instances;
  j["num_candidates"] = num_candidates;
  j["num_valid"] = num_valid ? nlohmann::json(*num_valid) : nlohmann::json(nullptr);
  for (const std::string& name : MetricNames()) j[name] = OptionalToJson(Get(name));
  if (fakeness_real_reference) {
    j["fakeness_real_reference"] = {{"mean", fakeness_real_reference->mean},
                                    {"std", fakeness_real_reference->std},
                                    {"count", fakeness_real_reference->count}};
  } else {
    j["fakeness_real_reference"] = nullptr;
  }
  nlohmann::json per_feature = nlohmann::json::object();
  for (const auto& [column, value] : per_feature_divergence) per_feature[column] = OptionalToJson(value);
  j["per_feature_divergence"] = std::move(per_feature);
  return j;
}

MetricsReport MetricsReport::FromJson(const nlohmann::json& j) {
  MetricsReport r;
  r.num_instances = j.at("num_instances").get<std::size_t>();
  r.num_candidates = j.at("num_candidates").get<std::size_t>();
  if (!j.at("num_valid").is_null()) r.num_valid = j.at("num_valid").get<std::size_t>();
  r.valid_fraction = OptionalFromJson(j, "valid_fraction");
  r.mean_counterfactual_prediction = OptionalFromJson(j, "mean_counterfactual_prediction");
  r.categories_changed = OptionalFromJson(j, "categories_changed");
  r.mean_percentile_shift = OptionalFromJson(j, "mean_percentile_shift");
  r.max_percentile_shift = OptionalFromJson(j, "max_percentile_shift");
  r.fakeness = OptionalFromJson(j, "fakeness");
  r.categorical_diversity = OptionalFromJson(j, "categorical_diversity");
  r.continuous_diversity = OptionalFromJson(j, "continuous_diversity");
  if (auto it = j.find("fakeness_real_reference"); it != j.end() && !it->is_null()) {
    r.fakeness_real_reference = FakenessReference{it->at("mean").get<double>(),
                                                  it->at("std").get<double>(),
                                                  it->at("count").get<std::size_t>()};
  }
  for (const auto& [column, value] : j.at("per_feature_divergence").items()) {
    r.per_feature_divergence[column] =
        value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
  }
  return r;
}

bool MetricsReport::operator==(const MetricsReport& other) const {
  return ToJson() == other.ToJson();
}

MetricsReport Evaluate(const EvaluationContext& context, std::span<const InstanceCandidates> batch) {
  if (context.schema == nullptr || context.cdf == nullptr) {
    throw std::invalid_argument("Evaluate needs a schema and a fitted cdf");
  }
  const Schema& schema = *context.schema;
  const EmpiricalCdf& cdf = *context.cdf;

  MetricsReport report;
  report.num_instances = batch.size();
  bool have_predictions = !batch.empty();
  for (const InstanceCandidates& inst : batch) {
    if (inst.tmpl.num_features() != schema.num_features() ||
        inst.original.size() != schema.num_features()) {
      throw SchemaError("original/template does not match the schema");
    }
    if (!inst.predictions.empty() && inst.predictions.size() != inst.candidates.size()) {
      throw UserError("prediction count does not match candidate count");
    }
    have_predictions = have_predictions && (inst.predictions.size() == inst.candidates.size());
    report.num_candidates += inst.candidates.size();
  }
  if (report.num_candidates == 0) have_predictions = false;

  Accumulator valid, desired_prob, cat_changed, mean_shift, max_shift, cat_div, cont_div, fake;
  std::vector<Accumulator> per_feature(schema.num_features());
  std::vector<Row> evaluated_rows;
  for (const InstanceCandidates& inst : batch) {
    std::vector<Row> kept;
    for (std::size_t i = 0; i < inst.candidates.size(); ++i) {
      const Row& cand = inst.candidates[i];
      bool is_valid = true;
      if (have_predictions) {
        const CandidatePrediction& pred = inst.predictions[i];
        is_valid = pred.predicted_class == inst.tmpl.desired_class;
        valid.Add(is_valid ? 1.0 : 0.0);
        if (!pred.probabilities.empty()) {
          desired_prob.Add(pred.probabilities.at(static_cast<std::size_t>(inst.tmpl.desired_class)));
        }
      }
      if (!is_valid) continue;
      kept.push_back(cand);
      if (auto c = CategoriesChanged(schema, inst.original, cand)) cat_changed.Add(*c);
      if (auto p = PercentileShifts(schema, cdf, inst.original, cand)) {
        mean_shift.Add(p->mean);
        max_shift.Add(p->max);
      }
      for (std::size_t j = 0; j < schema.num_features(); ++j) {
        if (schema.column(j).is_categorical()) {
          per_feature[j].Add(inst.original[j] != cand[j] ? 1.0 : 0.0);
        } else {
          per_feature[j].Add(std::abs(cdf.Evaluate(j, cand[j]) - cdf.Evaluate(j, inst.original[j])));
        }
      }
    }
    // Pooled pairs: accumulate per-pair values rather than per-instance means.
    for (std::size_t i = 0; i < kept.size(); ++i) {
      for (std::size_t k = i + 1; k < kept.size(); ++k) {
        if (kept[i] == kept[k]) continue;
        if (auto c = CategoriesChanged(schema, kept[i], kept[k])) cat_div.Add(*c);
        if (auto p = PercentileShifts(schema, cdf, kept[i], kept[k])) cont_div.Add(p->mean);
      }
    }
    evaluated_rows.insert(evaluated_rows.end(), kept.begin(), kept.end());
  }

  if (have_predictions) {
    report.num_valid = valid.count == 0 ? 0 : static_cast<std::size_t>(std::llround(valid.sum));
    report.valid_fraction = valid.Mean();
    report.mean_counterfactual_prediction = desired_prob.Mean();
  }
  report.categories_changed = cat_changed.Mean();
  report.mean_percentile_shift = mean_shift.Mean();
  report.max_percentile_shift = max_shift.Mean();
  report.categorical_diversity = cat_div.Mean();
  report.continuous_diversity = cont_div.Mean();
  if (context.fakeness != nullptr && !evaluated_rows.empty()) {
    for (double s : context.fakeness->Score(evaluated_rows)) fake.Add(s);
    report.fakeness = fake.Mean();
  }
  report.fakeness_real_reference = context.fakeness_reference;
  for (std::size_t j = 0; j < schema.num_features(); ++j) {
    report.per_feature_divergence[schema.column(j).name] = per_feature[j].Mean();
  }
  return report;
}

}  // namespace flexcf
