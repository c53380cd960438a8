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

#ifndef FLEXCF_METRICS_METRICS_H_
#define FLEXCF_METRICS_METRICS_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexcf/cf/template.h"
#include "flexcf/data/ecdf.h"
#include "flexcf/data/schema.h"
#include "json.hpp"

namespace flexcf {

// Fraction of categorical columns whose category differs. nullopt when the
// schema has no categorical columns.
std::optional<double> CategoriesChanged(const Schema& schema, const Row& a, const Row& b);

struct PercentileShift {
  double mean = 0.0;
  double max = 0.0;
};

// Per continuous column |cdf(b_j) - cdf(a_j)|, averaged and maximised over
// columns. nullopt when the schema has no continuous columns.
std::optional<PercentileShift> PercentileShifts(const Schema& schema, const EmpiricalCdf& cdf,
                                                const Row& a, const Row& b);

struct Diversity {
  std::optional<double> categorical;
  std::optional<double> continuous;
  std::size_t pairs = 0;
};

// Mean pairwise categories-changed / mean-percentile-shift over unordered
// pairs of non-identical candidates; absent with fewer than two distinct.
Diversity ComputeDiversity(const Schema& schema, const EmpiricalCdf& cdf,
                           std::span<const Row> candidates);

// Independent realism critic. Higher score = more fake.
class FakenessScorer {
 public:
  virtual ~FakenessScorer() = default;
  virtual std::vector<double> Score(std::span<const Row> rows) const = 0;
};

struct FakenessReference {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

FakenessReference ComputeFakenessReference(const FakenessScorer& scorer,
                                           std::span<const Row> real_rows);

struct CandidatePrediction {
  int predicted_class = 0;
  std::vector<double> probabilities;
};

// Candidates generated for one original under one template.
struct InstanceCandidates {
  Row original;
  CounterfactualTemplate tmpl;
  std::vector<Row> candidates;
  // Parallel to candidates; empty when no classifier verdict is available.
  std::vector<CandidatePrediction> predictions;
};

struct MetricsReport {
  std::size_t num_instances = 0;
  std::size_t num_candidates = 0;
  std::optional<std::size_t> num_valid;

  std::optional<double> valid_fraction;
  std::optional<double> mean_counterfactual_prediction;
  std::optional<double> categories_changed;
  std::optional<double> mean_percentile_shift;
  std::optional<double> max_percentile_shift;
  std::optional<double> fakeness;
  std::optional<FakenessReference> fakeness_real_reference;
  std::optional<double> categorical_diversity;
  std::optional<double> continuous_diversity;
  // Column -> mean of changed-indicator (categorical) or percentile shift
  // (continuous) over the evaluated candidates; null when there are none.
  std::map<std::string, std::optional<double>> per_feature_divergence;

  // Named scalar view used by sweeps and aggregates.
  std::optional<double> Get(const std::string& metric) const;
  nlohmann::json ToJson() const;
  static MetricsReport FromJson(const nlohmann::json& json);
  bool operator==(const MetricsReport&) const;
};

// Names of the scalar measures, in report order.
const std::vector<std::string>& MetricNames();

struct EvaluationContext {
  const Schema* schema = nullptr;
  const EmpiricalCdf* cdf = nullptr;
  const FakenessScorer* fakeness = nullptr;          // optional
  std::optional<FakenessReference> fakeness_reference;  // reported alongside
};

// Aggregates all measures. Validity uses every candidate; divergence,
// diversity, fakeness and per-feature measures use valid candidates only
// (all candidates when predictions are unavailable). Diversity pairs are
// formed within each instance's candidate set.
MetricsReport Evaluate(const EvaluationContext& context, std::span<const InstanceCandidates> batch);

}  // namespace flexcf

#endif  // FLEXCF_METRICS_METRICS_H_
