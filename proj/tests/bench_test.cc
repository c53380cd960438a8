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

#include <gtest/gtest.h>

#include <filesystem>

#include "flexcf/bench/bench.h"
#include "flexcf/bench/pipeline.h"
#include "test_util.h"

namespace flexcf {
namespace {

PipelineConfig TinyPipeline() {
  PipelineConfig c;
  c.synthetic_rows = 600;
  c.classifier = testing::TinyClassifierConfig();
  c.critic = testing::TinyCriticConfig();
  c.fcegan = testing::TinyFceganConfig();
  c.rgd.steps = 5;
  c.sweep.grid = {0.5, 1.0};
  c.sweep.seeds = {0, 1};
  c.sweep.cap = 30;
  c.sweep.n_per_instance = 3;
  return c;
}

MetricsReport ReportWithValid(double v) {
  MetricsReport r;
  r.valid_fraction = v;
  r.categories_changed = 0.0;
  return r;
}

SweepResult HandMadeResult(const std::string& method, std::vector<std::vector<double>> valid) {
  SweepResult r;
  r.method = method;
  r.grid = {0.0, 0.5, 1.0};
  for (std::size_t s = 0; s < valid.size(); ++s) {
    r.seeds.push_back(s);
    std::vector<MetricsReport> levels;
    for (double v : valid[s]) levels.push_back(ReportWithValid(v));
    r.reports.push_back(levels);
  }
  FinalizeAggregates(r);
  return r;
}

TEST(TrapezoidAucTest, ConstantOneOverUnitGridIsOne) {
  const std::vector<double> grid = {0.0, 1.0};
  const std::vector<std::optional<double>> values = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(*TrapezoidAuc(grid, values), 1.0);
}

TEST(TrapezoidAucTest, UnevenGridAndMissingValues) {
  const std::vector<double> grid = {0.1, 0.25, 0.5, 1.0};
  const std::vector<std::optional<double>> ramp = {0.1, 0.25, 0.5, 1.0};
  // Integral of y = x from 0.1 to 1 is exact for a linear curve.
  EXPECT_NEAR(*TrapezoidAuc(grid, ramp), 0.5 * (1.0 - 0.01), 1e-12);
  const std::vector<std::optional<double>> gap = {0.1, std::nullopt, 0.5, 1.0};
  EXPECT_FALSE(TrapezoidAuc(grid, gap).has_value());
}

TEST(StandardErrorTest, KnownValues) {
  const std::vector<double> same(5, 0.42);
  EXPECT_EQ(StandardError(same), 0.0);
  EXPECT_EQ(StandardError(std::vector<double>{3.0}), 0.0);
  EXPECT_NEAR(StandardError(std::vector<double>{1.0, 2.0, 3.0}), 1.0 / std::sqrt(3.0), 1e-12);
}

TEST(FinalizeAggregatesTest, IdenticalSeedsHaveZeroSem) {
  const SweepResult r = HandMadeResult("m", std::vector<std::vector<double>>(5, {0.2, 0.4, 0.8}));
  EXPECT_NEAR(*r.auc_mean.at("valid_fraction"), 0.25 * (0.2 + 0.4) + 0.25 * (0.4 + 0.8), 1e-12);
  EXPECT_EQ(*r.auc_sem.at("valid_fraction"), 0.0);
  EXPECT_FALSE(r.auc_mean.at("fakeness").has_value());
}

TEST(NormalizeTest, SelfNormalizationIsOne) {
  const SweepResult r = HandMadeResult("m", {{0.2, 0.4, 0.8}, {0.3, 0.5, 0.6}});
  const NormalizedResult n = NormalizeAgainst(r, r);
  EXPECT_DOUBLE_EQ(*n.value.at("valid_fraction"), 1.0);
}

TEST(NormalizeTest, ZeroReferenceAucIsUndefined) {
  const SweepResult r = HandMadeResult("m", {{0.2, 0.4, 0.8}});
  const SweepResult ref = HandMadeResult("ref", {{0.0, 0.0, 0.0}});
  const NormalizedResult n = NormalizeAgainst(r, ref);
  EXPECT_FALSE(n.value.at("valid_fraction").has_value());
  EXPECT_NE(std::find(n.undefined.begin(), n.undefined.end(), "valid_fraction"), n.undefined.end());
  // categories_changed is 0 everywhere in both, so it is undefined as well.
  EXPECT_FALSE(n.value.at("categories_changed").has_value());
}

TEST(NormalizeTest, IdenticalSeedRunsHaveZeroNormalizedSem) {
  const SweepResult r = HandMadeResult("m", std::vector<std::vector<double>>(3, {0.2, 0.4, 0.8}));
  const SweepResult ref = HandMadeResult("ref", std::vector<std::vector<double>>(3, {0.1, 0.3, 0.5}));
  const NormalizedResult n = NormalizeAgainst(r, ref);
  EXPECT_EQ(*n.sem.at("valid_fraction"), 0.0);
  EXPECT_NEAR(*n.value.at("valid_fraction"), (0.15 + 0.3) / (0.1 + 0.2), 1e-12);
}

TEST(DivergenceStudyTest, ClassifierModeEmitsThreeConfigs) {
  const auto configs = DivergenceStudyConfigs(FceganConfig::ForMode(FceganMode::kClassifier));
  ASSERT_EQ(configs.size(), 3u);
  EXPECT_EQ(configs[0].second.lambda_m, 0.0);
  EXPECT_EQ(configs[1].second.lambda_m, 10.0);
  EXPECT_EQ(configs[2].second.lambda_m, 100.0);
  for (const auto& [name, c] : configs) EXPECT_EQ(c.mode, FceganMode::kClassifier);
}

TEST(SweepTemplateTest, DeterministicWithRequestedFraction) {
  const Schema schema = testing::MixedSchema();
  const Row x = {30.0, 1.0, 0.0, 0.0};
  const auto a = SweepTemplate(schema, x, 0.5, 1, 3, 2, 7);
  EXPECT_EQ(a, SweepTemplate(schema, x, 0.5, 1, 3, 2, 7));
  EXPECT_EQ(a.num_mutable(), 2u);
  EXPECT_EQ(SweepTemplate(schema, x, 0.25, 1, 3, 0, 0).num_mutable(), 1u);
  EXPECT_EQ(SweepTemplate(schema, x, 1.0, 1, 3, 0, 0).num_mutable(), 4u);
}

class TinyBench : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    torch::set_num_threads(1);
    const PipelineConfig config = TinyPipeline();
    pipeline_ = new BenchPipeline(config, LoadPipelineData(config));
  }
  static void TearDownTestSuite() { delete pipeline_; }
  static BenchPipeline* pipeline_;
};
BenchPipeline* TinyBench::pipeline_ = nullptr;

TEST_F(TinyBench, SelectedInstancesAreUndesired) {
  const auto env = pipeline_->Environment();
  ASSERT_FALSE(env.instances.empty());
  EXPECT_LE(env.instances.size(), 30u);
  for (int c : pipeline_->classifier()->PredictClasses(env.instances)) EXPECT_NE(c, pipeline_->desired_class());
}

TEST_F(TinyBench, RandomInputValidityStrictlyInsideUnitInterval) {
  const SweepResult r = pipeline_->Run(kMethodRandomInput);
  ASSERT_EQ(r.reports.size(), 2u);
  const double v = *r.LevelMean("valid_fraction", 1);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.0);
}

TEST_F(TinyBench, RandomInputRespectsTemplates) {
  RandomInputMethod method(pipeline_->split().train.rows);
  const Schema& schema = pipeline_->split().train.schema;
  std::vector<CounterfactualQuery> queries;
  for (std::size_t i = 0; i < 10; ++i) {
    const Row& x = pipeline_->split().test.rows[i];
    queries.push_back({x, MakeTemplate(schema, x, std::vector<bool>{i % 2 == 0, i % 2 == 1}, 1), {}});
  }
  for (const auto& inst : method.Run(queries, 4, 0)) {
    for (const Row& c : inst.candidates) {
      for (std::size_t j = 0; j < c.size(); ++j) {
        if (!inst.tmpl.is_mutable(j)) EXPECT_EQ(c[j], inst.original[j]);
      }
    }
  }
}

TEST_F(TinyBench, SweepsAreBitwiseReproducible) {
  for (const char* method : {kMethodRandomInput, kMethodRgdTemplate, kMethodFceganClassifier}) {
    const auto a = pipeline_->Run(method).ToJson().dump();
    BenchPipeline fresh(TinyPipeline(), LoadPipelineData(TinyPipeline()));
    EXPECT_EQ(a, fresh.Run(method).ToJson().dump()) << method;
  }
}

TEST_F(TinyBench, WritesAggregateAndPlots) {
  testing::TempDir dir("bench");
  std::vector<SweepResult> results = {pipeline_->Run(kMethodRandomInput)};
  WriteSweepResults(dir.str(), results, Provenance{"test", "synthetic", {}});
  const std::string csv = testing::ReadFile(dir / "aggregate.csv");
  EXPECT_EQ(csv.rfind("method,metric,level,mean,sem\n", 0), 0u);
  EXPECT_NE(csv.find("random_input,valid_fraction,auc,"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "provenance.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "flexibility_valid_fraction.svg"));
  EXPECT_TRUE(std::filesystem::exists(dir / "auc_valid_fraction.svg"));
  EXPECT_TRUE(std::filesystem::exists(dir / "cells/random_input_seed0.json"));
}

TEST_F(TinyBench, StudyResultsAreNamedByLevel) {
  const auto results = pipeline_->RunDivergenceStudy(FceganMode::kClassifier);
  ASSERT_EQ(results.size(), 3u);
  EXPECT_EQ(results[1].method, "fcegan_classifier_lambda_m_10");
}

}  // namespace
}  // namespace flexcf
