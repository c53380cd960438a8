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

#ifndef FLEXCF_TESTS_METRICS_ORACLE_H_
#define FLEXCF_TESTS_METRICS_ORACLE_H_

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flexcf/common/rng.h"
#include "flexcf/data/schema.h"
#include "flexcf/metrics/metrics.h"

namespace flexcf::testing {

// Straight-line reimplementation of the quality measures: explicit loops,
// its own percentile rank by counting, no shared helpers.
struct OracleReport {
  std::optional<double> valid_fraction;
  std::optional<double> mean_counterfactual_prediction;
  std::optional<double> categories_changed;
  std::optional<double> mean_percentile_shift;
  std::optional<double> max_percentile_shift;
  std::optional<double> fakeness;
  std::optional<double> categorical_diversity;
  std::optional<double> continuous_diversity;
  std::map<std::string, std::optional<double>> per_feature;

  std::optional<double> Get(const std::string& name) const {
    if (name == "valid_fraction") return valid_fraction;
    if (name == "mean_counterfactual_prediction") return mean_counterfactual_prediction;
    if (name == "categories_changed") return categories_changed;
    if (name == "mean_percentile_shift") return mean_percentile_shift;
    if (name == "max_percentile_shift") return max_percentile_shift;
    if (name == "fakeness") return fakeness;
    if (name == "categorical_diversity") return categorical_diversity;
    return continuous_diversity;
  }
};

inline double OraclePercentile(const std::vector<Row>& train, std::size_t column, double v) {
  double less = 0, equal = 0;
  for (const Row& r : train) {
    if (r[column] < v) less += 1;
    if (r[column] == v) equal += 1;
  }
  return (less + 0.5 * equal) / static_cast<double>(train.size());
}

inline OracleReport BruteForceMetrics(const Schema& schema, const std::vector<Row>& train,
                                      const FakenessScorer* scorer,
                                      const std::vector<InstanceCandidates>& batch) {
  OracleReport out;
  const std::size_t C = schema.num_features();
  std::vector<std::size_t> cat_cols, cont_cols;
  for (std::size_t j = 0; j < C; ++j) (schema.column(j).is_categorical() ? cat_cols : cont_cols).push_back(j);

  bool all_predicted = true;
  std::size_t total = 0;
  for (const auto& inst : batch) {
    total += inst.candidates.size();
    if (inst.predictions.size() != inst.candidates.size()) all_predicted = false;
  }
  if (total == 0) all_predicted = false;

  double valid_sum = 0, valid_n = 0, prob_sum = 0, prob_n = 0;
  double cc_sum = 0, cc_n = 0, ms_sum = 0, mx_sum = 0, ps_n = 0;
  double cd_sum = 0, cd_n = 0, sd_sum = 0, sd_n = 0;
  double fake_sum = 0, fake_n = 0;
  std::vector<double> pf_sum(C, 0), pf_n(C, 0);

  for (const auto& inst : batch) {
    std::vector<Row> kept;
    for (std::size_t i = 0; i < inst.candidates.size(); ++i) {
      bool valid = true;
      if (all_predicted) {
        valid = inst.predictions[i].predicted_class == inst.tmpl.desired_class;
        valid_sum += valid ? 1 : 0;
        valid_n += 1;
        if (!inst.predictions[i].probabilities.empty()) {
          prob_sum += inst.predictions[i].probabilities[inst.tmpl.desired_class];
          prob_n += 1;
        }
      }
      if (valid) kept.push_back(inst.candidates[i]);
    }
    for (const Row& c : kept) {
      if (!cat_cols.empty()) {
        double changed = 0;
        for (std::size_t j : cat_cols) changed += c[j] != inst.original[j] ? 1 : 0;
        cc_sum += changed / static_cast<double>(cat_cols.size());
        cc_n += 1;
      }
      if (!cont_cols.empty()) {
        double s = 0, m = 0;
        for (std::size_t j : cont_cols) {
          const double d = std::fabs(OraclePercentile(train, j, c[j]) - OraclePercentile(train, j, inst.original[j]));
          s += d;
          if (d > m) m = d;
        }
        ms_sum += s / static_cast<double>(cont_cols.size());
        mx_sum += m;
        ps_n += 1;
      }
      for (std::size_t j = 0; j < C; ++j) {
        if (schema.column(j).is_categorical()) {
          pf_sum[j] += c[j] != inst.original[j] ? 1 : 0;
        } else {
          pf_sum[j] += std::fabs(OraclePercentile(train, j, c[j]) - OraclePercentile(train, j, inst.original[j]));
        }
        pf_n[j] += 1;
      }
      if (scorer) {
        fake_sum += scorer->Score(std::vector<Row>{c})[0];
        fake_n += 1;
      }
    }
    for (std::size_t a = 0; a < kept.size(); ++a) {
      for (std::size_t b = 0; b < kept.size(); ++b) {
        if (b <= a || kept[a] == kept[b]) continue;
        if (!cat_cols.empty()) {
          double changed = 0;
          for (std::size_t j : cat_cols) changed += kept[a][j] != kept[b][j] ? 1 : 0;
          cd_sum += changed / static_cast<double>(cat_cols.size());
          cd_n += 1;
        }
        if (!cont_cols.empty()) {
          double s = 0;
          for (std::size_t j : cont_cols) {
            s += std::fabs(OraclePercentile(train, j, kept[a][j]) - OraclePercentile(train, j, kept[b][j]));
          }
          sd_sum += s / static_cast<double>(cont_cols.size());
          sd_n += 1;
        }
      }
    }
  }
  auto mean = [](double s, double n) { return n > 0 ? std::optional<double>(s / n) : std::nullopt; };
  if (all_predicted) {
    out.valid_fraction = mean(valid_sum, valid_n);
    out.mean_counterfactual_prediction = mean(prob_sum, prob_n);
  }
  out.categories_changed = mean(cc_sum, cc_n);
  out.mean_percentile_shift = mean(ms_sum, ps_n);
  out.max_percentile_shift = mean(mx_sum, ps_n);
  out.categorical_diversity = mean(cd_sum, cd_n);
  out.continuous_diversity = mean(sd_sum, sd_n);
  out.fakeness = mean(fake_sum, fake_n);
  for (std::size_t j = 0; j < C; ++j) out.per_feature[schema.column(j).name] = mean(pf_sum[j], pf_n[j]);
  return out;
}

// Deterministic stand-in scorer: a fixed nonlinear function of the row.
class SumScorer : public FakenessScorer {
 public:
  std::vector<double> Score(std::span<const Row> rows) const override {
    std::vector<double> out;
    for (const Row& r : rows) {
      double s = 0;
      for (std::size_t j = 0; j < r.size(); ++j) s += std::sin(r[j] + static_cast<double>(j));
      out.push_back(s);
    }
    return out;
  }
};

// Random schema with 1-4 continuous and 0-3 categorical columns (at least
// one column overall), split from a seed.
inline Schema RandomSchema(Rng& rng) {
  std::vector<Column> cols;
  const std::size_t n_cont = 1 + rng.UniformInt(4);
  const std::size_t n_cat = rng.UniformInt(4);
  for (std::size_t i = 0; i < n_cont; ++i) cols.push_back({"u" + std::to_string(i), ColumnKind::kContinuous, {}});
  for (std::size_t i = 0; i < n_cat; ++i) {
    std::vector<std::string> cats;
    for (std::size_t k = 0; k < 2 + rng.UniformInt(3); ++k) cats.push_back("k" + std::to_string(k));
    cols.push_back({"c" + std::to_string(i), ColumnKind::kCategorical, cats});
  }
  const std::size_t k = 2 + rng.UniformInt(2);
  std::vector<std::string> classes;
  for (std::size_t c = 0; c < k; ++c) classes.push_back("y" + std::to_string(c));
  return Schema(cols, "target", classes);
}

// Values are drawn from a small grid so ties and identical candidates occur.
inline Row RandomRow(const Schema& schema, Rng& rng) {
  Row r(schema.num_features());
  for (std::size_t j = 0; j < r.size(); ++j) {
    const Column& col = schema.column(j);
    r[j] = col.is_categorical() ? static_cast<double>(rng.UniformInt(col.categories.size()))
                                : std::round(rng.Normal() * 4.0) / 4.0;
  }
  return r;
}

// A batch of 1-3 instances with up to 10 candidates in total.
inline std::vector<InstanceCandidates> RandomBatch(const Schema& schema, Rng& rng, bool with_predictions,
                                                   bool with_probabilities = true) {
  std::vector<InstanceCandidates> batch;
  const std::size_t instances = 1 + rng.UniformInt(3);
  std::size_t budget = 10;
  for (std::size_t i = 0; i < instances; ++i) {
    InstanceCandidates inst;
    inst.original = RandomRow(schema, rng);
    inst.tmpl.mutable_mask.assign(schema.num_features(), true);
    inst.tmpl.frozen_values.assign(schema.num_features(), std::nullopt);
    inst.tmpl.desired_class = static_cast<int>(rng.UniformInt(schema.num_classes()));
    const std::size_t n = std::min<std::size_t>(budget, 1 + rng.UniformInt(5));
    budget -= n;
    for (std::size_t k = 0; k < n; ++k) {
      Row c = rng.Bernoulli(0.2) && !inst.candidates.empty() ? inst.candidates.back() : RandomRow(schema, rng);
      if (rng.Bernoulli(0.5)) c[0] = inst.original[0];
      inst.candidates.push_back(c);
      if (with_predictions) {
        CandidatePrediction p;
        p.predicted_class = static_cast<int>(rng.UniformInt(schema.num_classes()));
        if (with_probabilities) {
          double total = 0;
          for (std::size_t c2 = 0; c2 < schema.num_classes(); ++c2) {
            p.probabilities.push_back(0.05 + rng.Uniform());
            total += p.probabilities.back();
          }
          for (double& v : p.probabilities) v /= total;
        }
        inst.predictions.push_back(p);
      }
    }
    batch.push_back(std::move(inst));
    if (budget == 0) break;
  }
  return batch;
}

}  // namespace flexcf::testing

#endif  // FLEXCF_TESTS_METRICS_ORACLE_H_
