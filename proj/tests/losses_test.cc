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

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>

#include "flexcf/gan/fcegan.h"
#include "flexcf/gan/losses.h"
#include "flexcf/nn/modules.h"
#include "fd_util.h"
#include "test_util.h"

namespace flexcf {
namespace {

torch::Tensor F64(std::initializer_list<double> values, int64_t rows) {
  auto t = torch::tensor(std::vector<double>(values), torch::kFloat64);
  return t.reshape({rows, -1});
}

nn::SegmentLayout LayoutFor(const Schema& schema, const std::vector<Row>& rows) {
  return nn::SegmentLayout(Encoder::Fit(schema, rows));
}

Schema TwoContinuous() {
  return Schema({{"a", ColumnKind::kContinuous, {}}, {"b", ColumnKind::kContinuous, {}}}, "y",
                {"n", "p"});
}

TEST(DivergenceLossTest, IdenticalHardInstancesGiveZero) {
  const Dataset d = testing::MakeMixedDataset(50, 1);
  const Encoder enc = Encoder::Fit(d.schema, d.rows);
  const nn::SegmentLayout layout(enc);
  auto x = nn::ToTensor(enc.Encode(d.rows), torch::kFloat64);
  auto mask = torch::ones({x.size(0), layout.num_columns()}, torch::kFloat64);
  EXPECT_EQ(DivergenceLoss(layout, x, x, mask, 1.0, 1.0).item<double>(), 0.0);
}

TEST(DivergenceLossTest, SingleMutableContinuousSquaredDifference) {
  const auto layout = LayoutFor(TwoContinuous(), {{0.0, 0.0}, {1.0, 1.0}});
  auto og = F64({0.0, 0.0}, 1), cf = F64({2.0, 0.0}, 1), mask = F64({1.0, 0.0}, 1);
  EXPECT_DOUBLE_EQ(DivergenceLoss(layout, og, cf, mask, 1.0).item<double>(), 2.0);
}

TEST(DivergenceLossTest, SoftCategoricalCrossEntropy) {
  Schema s({{"c", ColumnKind::kCategorical, {"u", "v"}}}, "y", {"n", "p"});
  const auto layout = LayoutFor(s, {{0.0}, {1.0}});
  auto og = F64({1.0, 0.0}, 1), cf = F64({0.5, 0.5}, 1), mask = F64({1.0}, 1);
  EXPECT_NEAR(DivergenceLoss(layout, og, cf, mask, 1.0).item<double>(), std::log(2.0), 1e-12);
}

TEST(DivergenceLossTest, ImmutableTermOffByDefault) {
  const auto layout = LayoutFor(TwoContinuous(), {{0.0, 0.0}, {1.0, 1.0}});
  auto og = F64({0.0, 0.0}, 1), cf = F64({0.0, 3.0}, 1), mask = F64({1.0, 0.0}, 1);
  EXPECT_EQ(DivergenceLoss(layout, og, cf, mask, 1.0).item<double>(), 0.0);
  EXPECT_DOUBLE_EQ(DivergenceLoss(layout, og, cf, mask, 1.0, 2.0).item<double>(), 0.5 * 2.0 * 9.0);
}

TEST(DivergenceLossTest, GradientMatchesFiniteDifferences) {
  const Dataset d = testing::MakeMixedDataset(40, 2);
  const Encoder enc = Encoder::Fit(d.schema, d.rows);
  const nn::SegmentLayout layout(enc);
  std::vector<Row> rows(d.rows.begin(), d.rows.begin() + 4);
  auto og = nn::ToTensor(enc.Encode(rows), torch::kFloat64);
  torch::manual_seed(3);
  auto raw = torch::randn(og.sizes(), torch::kFloat64);
  auto mask = F64({1, 0, 1, 1, 0, 1, 1, 0, 1, 1, 1, 1, 0, 0, 1, 0}, 4);
  auto f = [&](const torch::Tensor& r) {
    return DivergenceLoss(layout, og, layout.Activate(r, nn::SimplexActivation::kSoftmax), mask, 1.7,
                          0.3);
  };
  EXPECT_LT(testing::CheckGradient(f, raw).max_relative_error, 1e-4);
}

TEST(GradientPenaltyTest, ConstantCriticGivesCoefficient) {
  auto real = torch::randn({20, 3}, torch::kFloat64), fake = torch::randn({20, 3}, torch::kFloat64);
  CriticFn constant = [](const torch::Tensor& x) { return x.sum(1, true) * 0.0 + 0.7; };
  EXPECT_NEAR(GradientPenalty(constant, real, fake, 10, 10.0).item<double>(), 10.0, 1e-12);
  EXPECT_EQ(CriticWassersteinLoss(constant(real), constant(fake)).item<double>(), 0.0);
}

TEST(GradientPenaltyTest, UnitLinearCriticGivesZero) {
  const int64_t pac = 5, dims = 3;
  auto w = torch::randn({pac * dims, 1}, torch::kFloat64);
  w = w / w.norm();
  CriticFn linear = [&](const torch::Tensor& x) { return x.reshape({-1, pac * dims}).matmul(w); };
  auto real = torch::randn({20, dims}, torch::kFloat64), fake = torch::randn({20, dims}, torch::kFloat64);
  EXPECT_NEAR(GradientPenalty(linear, real, fake, pac, 10.0).item<double>(), 0.0, 1e-12);
}

TEST(GradientPenaltyTest, QuadraticCriticMatchesAnalytic) {
  // f(x) = ||x||^2 / 2 per pac group, so the gradient norm is ||x||.
  const int64_t pac = 2, dims = 3, batch = 8;
  torch::manual_seed(11);
  auto real = torch::randn({batch, dims}, torch::kFloat64), fake = torch::randn({batch, dims}, torch::kFloat64);
  CriticFn quadratic = [&](const torch::Tensor& x) {
    return 0.5 * x.reshape({-1, pac * dims}).pow(2).sum(1, true);
  };
  auto gen = at::make_generator<at::CPUGeneratorImpl>(99);
  const double penalty = GradientPenalty(quadratic, real, fake, pac, 10.0, gen).item<double>();

  auto replay = at::make_generator<at::CPUGeneratorImpl>(99);
  auto alpha = torch::rand({batch / pac, 1, 1}, replay, torch::kFloat64);
  auto r = real.reshape({batch / pac, pac, dims}), fk = fake.reshape({batch / pac, pac, dims});
  double expected = 0.0;
  for (int64_t g = 0; g < batch / pac; ++g) {
    const double a = alpha[g][0][0].item<double>();
    double sq = 0.0;
    for (int64_t i = 0; i < pac; ++i) {
      for (int64_t j = 0; j < dims; ++j) {
        const double v = a * r[g][i][j].item<double>() + (1 - a) * fk[g][i][j].item<double>();
        sq += v * v;
      }
    }
    expected += (std::sqrt(sq) - 1.0) * (std::sqrt(sq) - 1.0);
  }
  expected = 10.0 * expected / static_cast<double>(batch / pac);
  EXPECT_NEAR(penalty, expected, 1e-6);
}

TEST(PacCriticTest, FiveHundredByTenGivesFiftyGroups) {
  nn::PacCritic critic(7, std::vector<int64_t>{16}, 10, 0.0);
  EXPECT_EQ(critic->forward(torch::randn({500, 7})).size(0), 50);
  EXPECT_THROW(critic->forward(torch::randn({505, 7})), c10::Error);
}

TEST(GeneratorLossTest, AdversarialWeightedMean) {
  GeneratorLossTerms terms;
  terms.critic_og_fake = torch::full({4, 1}, 0.2, torch::kFloat64);
  terms.critic_cf_fake = torch::full({4, 1}, 0.4, torch::kFloat64);
  GeneratorLossWeights w{0.5, 0.5, 0.0};
  EXPECT_NEAR(GeneratorLoss(terms, w).item<double>(), -0.3, 1e-12);
}

TEST(GeneratorLossTest, PerfectClassifierHitIsZero) {
  GeneratorLossTerms terms;
  terms.critic_og_fake = torch::full({2, 1}, 5.0, torch::kFloat64);
  terms.critic_cf_fake = torch::full({2, 1}, -3.0, torch::kFloat64);
  terms.classifier_ce = ClassifierLoss(F64({-100, 100, 100, -100}, 2), torch::tensor({1, 0}));
  EXPECT_NEAR(GeneratorLoss(terms, {0.0, 0.0, 1.0}).item<double>(), 0.0, 1e-12);
}

TEST(GeneratorLossTest, BlackBoxHasNoClassifierTerm) {
  const FceganConfig config = FceganConfig::ForMode(FceganMode::kBlackBox);
  EXPECT_EQ(config.lambda_clas, 0.0);
  GeneratorLossTerms terms;
  terms.critic_og_fake = torch::full({2, 1}, 0.1, torch::kFloat64);
  terms.critic_cf_fake = torch::full({2, 1}, 0.3, torch::kFloat64);
  const GeneratorLossWeights w{config.lambda_og, config.lambda_cf, config.lambda_clas};
  const double without = GeneratorLoss(terms, w).item<double>();
  terms.classifier_ce = torch::tensor(123.0, torch::kFloat64);
  EXPECT_EQ(GeneratorLoss(terms, w).item<double>(), without);
}

TEST(ClassifierLossTest, GradientThroughClassifierMatchesFiniteDifferences) {
  torch::manual_seed(5);
  nn::Mlp mlp(6, std::vector<int64_t>{8}, 3);
  mlp->to(torch::kFloat64);
  auto desired = torch::tensor({2, 0, 1}, torch::kInt64);
  auto x = torch::randn({3, 6}, torch::kFloat64);
  auto f = [&](const torch::Tensor& cand) { return ClassifierLoss(mlp->forward(cand), desired); };
  EXPECT_LT(testing::CheckGradient(f, x).max_relative_error, 1e-4);
}

}  // namespace
}  // namespace flexcf
