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

#ifndef FLEXCF_BENCH_BENCH_H_
#define FLEXCF_BENCH_BENCH_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexcf/cf/template.h"
#include "flexcf/classifier/classifier.h"
#include "flexcf/gan/critic.h"
#include "flexcf/gan/fcegan.h"
#include "flexcf/metrics/metrics.h"
#include "flexcf/optim/rgd.h"
#include "json.hpp"

namespace flexcf {

inline constexpr const char* kMethodFceganClassifier = "fcegan_classifier";
inline constexpr const char* kMethodFceganBlackBox = "fcegan_blackbox";
inline constexpr const char* kMethodFceganNoTemplate = "fcegan_no_template";
inline constexpr const char* kMethodRgdTemplate = "rgd_template";
inline constexpr const char* kMethodRgdDefault = "rgd_default";
inline constexpr const char* kMethodRandomInput = "random_input";
const std::vector<std::string>& KnownMethods();

struct CounterfactualQuery {
  Row instance;
  CounterfactualTemplate tmpl;
  // The instance's current (undesired) prediction, when known.
  std::optional<int> predicted_class;
};

// A counterfactual search strategy. Returned candidates always respect the
// template; predictions are filled in by the harness.
class CounterfactualMethod {
 public:
  virtual ~CounterfactualMethod() = default;
  virtual std::string id() const = 0;
  virtual std::vector<InstanceCandidates> Run(std::span<const CounterfactualQuery> queries, std::size_t n,
                                              uint64_t seed) const = 0;
};

class FceganMethod : public CounterfactualMethod {
 public:
  FceganMethod(std::string id, std::shared_ptr<const FceganModel> model)
      : id_(std::move(id)), model_(std::move(model)) {}
  std::string id() const override { return id_; }
  std::vector<InstanceCandidates> Run(std::span<const CounterfactualQuery> queries, std::size_t n,
                                      uint64_t seed) const override;

 private:
  std::string id_;
  std::shared_ptr<const FceganModel> model_;
};

// Template-guided or default RGD. The default variant's candidates are
// reset to the template afterwards so both are scored on the same terms.
class RgdMethod : public CounterfactualMethod {
 public:
  RgdMethod(std::string id, std::shared_ptr<const ClassifierModel> classifier,
            std::shared_ptr<const FakenessCritic> critic, OptimizerConfig config)
      : id_(std::move(id)), classifier_(std::move(classifier)), critic_(std::move(critic)), config_(config) {}
  std::string id() const override { return id_; }
  std::vector<InstanceCandidates> Run(std::span<const CounterfactualQuery> queries, std::size_t n,
                                      uint64_t seed) const override;

 private:
  std::string id_;
  std::shared_ptr<const ClassifierModel> classifier_;
  std::shared_ptr<const FakenessCritic> critic_;
  OptimizerConfig config_;
};

// Mutable features replaced by independent draws from the training
// marginals (the value of a uniformly drawn training row, per feature).
class RandomInputMethod : public CounterfactualMethod {
 public:
  explicit RandomInputMethod(std::vector<Row> train_rows) : train_rows_(std::move(train_rows)) {}
  std::string id() const override { return kMethodRandomInput; }
  std::vector<InstanceCandidates> Run(std::span<const CounterfactualQuery> queries, std::size_t n,
                                      uint64_t seed) const override;

 private:
  std::vector<Row> train_rows_;
};

struct SweepOptions {
  std::vector<double> grid = {0.1, 0.25, 0.5, 0.75, 1.0};
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4};
  std::size_t n_per_instance = 5;
  std::size_t cap = 500;
  // Class counterfactuals must reach; default: the last target class.
  std::optional<int> desired_class;

  void Validate() const;
  nlohmann::json ToJson() const;
};

// Test rows the classifier predicts as something other than `desired`,
// at most `cap`, in row order.
std::vector<Row> SelectInstances(const ClassifierModel& classifier, std::span<const Row> rows,
                                 int desired, std::size_t cap);

// Template for (seed, level, instance); identical across methods.
CounterfactualTemplate SweepTemplate(const Schema& schema, const Row& instance, double fraction,
                                     int desired, uint64_t seed, std::size_t level_index,
                                     std::size_t instance_index);

struct SweepResult {
  std::string method;
  std::vector<double> grid;
  std::vector<uint64_t> seeds;
  // reports[s][g] for seed s and grid level g.
  std::vector<std::vector<MetricsReport>> reports;
  // Per metric: AUC per seed (absent when a level lacks the metric).
  std::map<std::string, std::vector<std::optional<double>>> auc;
  std::map<std::string, std::optional<double>> auc_mean;
  std::map<std::string, std::optional<double>> auc_sem;
  std::optional<std::string> normalized_against;

  // Mean over seeds of a metric at grid level g.
  std::optional<double> LevelMean(const std::string& metric, std::size_t g) const;
  nlohmann::json ToJson() const;
};

// Raw trapezoid area over the grid; nullopt when any value is absent.
std::optional<double> TrapezoidAuc(std::span<const double> grid, std::span<const std::optional<double>> values);
// Sample standard deviation / sqrt(count); 0 for a single value.
double StandardError(std::span<const double> values);
void FinalizeAggregates(SweepResult& result);

// Everything a sweep needs besides the method.
struct SweepEnvironment {
  const ClassifierModel* classifier = nullptr;  // scores every candidate
  const EmpiricalCdf* cdf = nullptr;
  const FakenessScorer* fakeness = nullptr;
  std::optional<FakenessReference> fakeness_reference;
  std::vector<Row> instances;
};

using MethodProvider = std::function<std::shared_ptr<const CounterfactualMethod>(uint64_t seed)>;

SweepResult RunFlexibilitySweep(const std::string& method_id, const MethodProvider& provider,
                                const SweepEnvironment& env, const SweepOptions& options);

// AUC ratios against a reference; SEM by the first-order ratio rule.
// Metrics whose reference AUC is 0 (or absent) become undefined.
struct NormalizedResult {
  std::string method;
  std::string reference;
  std::map<std::string, std::optional<double>> value;
  std::map<std::string, std::optional<double>> sem;
  std::vector<std::string> undefined;
  nlohmann::json ToJson() const;
};
NormalizedResult NormalizeAgainst(const SweepResult& result, const SweepResult& reference);

// Divergence-constraint levels (none/small/large) and the lambda_m of each.
struct ConstraintLevel {
  std::string name;
  double lambda_m = 0.0;
};
std::vector<ConstraintLevel> DivergenceConstraintLevels(FceganMode mode);
std::vector<std::pair<std::string, FceganConfig>> DivergenceStudyConfigs(const FceganConfig& base);

// Provenance recorded next to sweep results.
struct Provenance {
  std::string commit;
  std::string dataset;
  nlohmann::json configs = nlohmann::json::object();
};

// <dir>/cells/<method>_seed<s>.json, <dir>/aggregate.csv,
// <dir>/flexibility_<metric>.svg, <dir>/auc_<metric>.svg, <dir>/provenance.json.
void WriteSweepResults(const std::string& dir, std::span<const SweepResult> results,
                       const Provenance& provenance);
std::string AggregateCsv(std::span<const SweepResult> results);
std::string FlexibilitySvg(std::span<const SweepResult> results, const std::string& metric);
std::string AucBarSvg(std::span<const SweepResult> results, const std::string& metric);

}  // namespace flexcf

#endif  // FLEXCF_BENCH_BENCH_H_
