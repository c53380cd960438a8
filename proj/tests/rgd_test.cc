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

#include "flexcf/common/error.h"
#include "flexcf/optim/rgd.h"
#include "fd_util.h"
#include "test_util.h"

namespace flexcf {
namespace {

using testing::MakeMixedDataset;

// Two continuous features x, z (x encoded as x / 10), logit_1 = w * x_enc - 1,
// logit_0 = 0, built from a width-1 hidden layer kept in its linear regime.
std::shared_ptr<ClassifierModel> LinearClassifier(double w) {
  Schema s({{"x", ColumnKind::kContinuous, {}}, {"z", ColumnKind::kContinuous, {}}}, "y", {"neg", "pos"});
  auto enc = std::make_shared<const Encoder>(Encoder::Fit(s, std::vector<Row>{{-10.0, 0.0}, {10.0, 1.0}}));
  ClassifierConfig config = testing::TinyClassifierConfig();
  config.hidden_dims = {1};
  auto model = std::make_shared<ClassifierModel>(enc, config);
  torch::NoGradGuard guard;
  auto p = model->network()->parameters();
  p[0].copy_(torch::tensor({{w, 0.0}}));
  p[1].fill_(10.0);
  p[2].copy_(torch::tensor({{0.0}, {1.0}}));
  p[3].copy_(torch::tensor({0.0, -11.0}));
  return model;
}

class RgdOnMixedData : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    torch::set_num_threads(1);
    split_ = new SplitDataset(Split(MakeMixedDataset(1000, 12), 0));
    auto enc = std::make_shared<const Encoder>(Encoder::Fit(split_->train.schema, split_->train.rows));
    classifier_ = new ClassifierModel(TrainClassifier(*split_, enc, testing::TinyClassifierConfig(), 1));
    critic_ = new FakenessCritic(TrainCritic(split_->train.rows, enc, testing::TinyCriticConfig(), 2));
  }
  static void TearDownTestSuite() {
    delete critic_;
    delete classifier_;
    delete split_;
  }

  static std::vector<OptimizationItem> Items(std::size_t begin, std::size_t count, double fraction,
                                             uint64_t seed) {
    Rng rng(seed);
    std::vector<OptimizationItem> items;
    const auto predicted = classifier_->PredictClasses(split_->test.rows);
    for (std::size_t i = begin; i < begin + count; ++i) {
      const Row& x = split_->test.rows[i];
      items.push_back({x, SampleTemplateWithFraction(split_->test.schema, x, fraction, 1 - predicted[i], rng)});
    }
    return items;
  }

  static SplitDataset* split_;
  static ClassifierModel* classifier_;
  static FakenessCritic* critic_;
};
SplitDataset* RgdOnMixedData::split_ = nullptr;
ClassifierModel* RgdOnMixedData::classifier_ = nullptr;
FakenessCritic* RgdOnMixedData::critic_ = nullptr;

TEST_F(RgdOnMixedData, EmptyMutableSetReturnsOriginals) {
  std::vector<OptimizationItem> items;
  for (std::size_t i = 0; i < 5; ++i) {
    const Row& x = split_->test.rows[i];
    items.push_back({x, MakeTemplate(split_->test.schema, x, std::vector<bool>(4, false), 1)});
  }
  OptimizerConfig config;
  config.steps = 40;
  const auto result = OptimizeBatch(*classifier_, critic_, items, 2, config, 0);
  for (std::size_t r = 0; r < items.size(); ++r) {
    for (const Row& c : result.instances[r].candidates) EXPECT_EQ(c, items[r].original);
  }
}

TEST_F(RgdOnMixedData, ProjectionHoldsAfterEveryStep) {
  const auto items = Items(0, 12, 0.5, 3);
  OptimizerConfig config;
  config.steps = 15;
  const std::size_t n = 2;
  int observed = 0;
  const Schema& schema = split_->test.schema;
  auto observer = [&](int step, std::span<const Row> rows) {
    ++observed;
    ASSERT_EQ(rows.size(), items.size() * n);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& item = items[i / n];
      for (std::size_t j = 0; j < schema.num_features(); ++j) {
        if (item.tmpl.is_mutable(j)) continue;
        if (schema.column(j).is_categorical()) {
          EXPECT_EQ(rows[i][j], item.original[j]) << "step " << step;
        } else {
          EXPECT_NEAR(rows[i][j], item.original[j], 1e-5 * std::max(1.0, std::abs(item.original[j])))
              << "step " << step;
        }
      }
    }
  };
  OptimizeBatch(*classifier_, critic_, items, n, config, 0, observer);
  EXPECT_EQ(observed, config.steps);
}

TEST_F(RgdOnMixedData, AllMutableGuidedMatchesDefault) {
  const auto items = Items(20, 10, 1.0, 4);
  OptimizerConfig guided;
  OptimizerConfig unguided = guided;
  unguided.template_guided = false;
  const auto a = OptimizeBatch(*classifier_, critic_, items, 1, guided, 5);
  const auto b = OptimizeBatch(*classifier_, critic_, items, 1, unguided, 5);
  for (std::size_t r = 0; r < items.size(); ++r) {
    EXPECT_EQ(a.instances[r].candidates, b.instances[r].candidates);
  }
  EXPECT_EQ(a.final_loss, b.final_loss);
}

TEST_F(RgdOnMixedData, DefaultVariantDriftsOnFrozenFeatures) {
  const auto items = Items(40, 20, 0.25, 6);
  OptimizerConfig config;
  config.template_guided = false;
  const auto result = OptimizeBatch(*classifier_, critic_, items, 1, config, 0);
  std::size_t drifted = 0;
  for (std::size_t r = 0; r < items.size(); ++r) {
    const Row& c = result.instances[r].candidates[0];
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (!items[r].tmpl.is_mutable(j) && c[j] != items[r].original[j]) ++drifted;
    }
  }
  EXPECT_GT(drifted, 0u);
}

TEST_F(RgdOnMixedData, FinalLossBelowInitialOnMostBatches) {
  OptimizerConfig config;
  int improved = 0;
  const int batches = 10;
  for (int b = 0; b < batches; ++b) {
    const auto items = Items(static_cast<std::size_t>(b) * 8, 8, 0.5, 100 + b);
    const auto result = OptimizeBatch(*classifier_, critic_, items, 1, config, b);
    if (result.final_loss <= result.initial_loss) ++improved;
  }
  EXPECT_GE(improved, 9);
}

TEST_F(RgdOnMixedData, TotalLossGradientMatchesFiniteDifferences) {
  const Encoder& enc = classifier_->encoder();
  const nn::SegmentLayout layout(enc);
  std::vector<Row> rows(split_->test.rows.begin(), split_->test.rows.begin() + 3);
  auto og = nn::ToTensor(enc.Encode(rows), torch::kFloat64);
  auto mask = torch::tensor({{1., 1., 0., 1.}, {0., 1., 1., 1.}, {1., 1., 1., 1.}}, torch::kFloat64);
  OptimizerConfig config;
  const RgdObjective objective(*classifier_, critic_, layout, config, og, mask,
                               torch::tensor({1, 0, 1}, torch::kInt64));
  torch::manual_seed(2);
  auto v = InitialVariables(layout, enc, og) + 0.3 * torch::randn(og.sizes(), torch::kFloat64);
  auto f = [&](const torch::Tensor& vars) { return objective.PerCandidate(vars).mean(); };
  EXPECT_LT(testing::CheckGradient(f, v).max_relative_error, 1e-4);
}

TEST_F(RgdOnMixedData, EmptyBatchAndBadConfigRejected) {
  OptimizerConfig config;
  EXPECT_THROW(OptimizeBatch(*classifier_, critic_, {}, 1, config, 0), UserError);
  config.steps = 0;
  const auto items = Items(0, 1, 1.0, 0);
  EXPECT_THROW(OptimizeBatch(*classifier_, critic_, items, 1, config, 0), ConfigError);
}

TEST(RgdLinearTest, CrossesBoundaryIffWeightNonZero) {
  torch::set_num_threads(1);
  OptimizerConfig config;
  config.lambda_div = 0.0;
  config.lambda_real = 0.0;
  config.steps = 100;
  for (double w : {-2.0, 2.0, 0.0}) {
    auto model = LinearClassifier(w);
    const Row x = {2.0, 0.5};
    ASSERT_EQ(model->PredictClasses(std::vector<Row>{x})[0], 0);
    OptimizationItem item{x, MakeTemplate(model->schema(), x, std::vector<bool>{true, false}, 1)};
    const auto result = OptimizeBatch(*model, nullptr, std::span<const OptimizationItem>(&item, 1), 1, config, 0);
    const bool crossed = result.instances[0].predictions[0].predicted_class == 1;
    EXPECT_EQ(crossed, w != 0.0) << "w = " << w;
    EXPECT_EQ(result.instances[0].candidates[0][1], 0.5);
  }
}

}  // namespace
}  // namespace flexcf
