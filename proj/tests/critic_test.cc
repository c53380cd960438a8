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

#include <numeric>

#include "flexcf/gan/critic.h"
#include "test_util.h"

namespace flexcf {
namespace {

double Mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

TEST(FakenessCriticTest, RealRowsScoreLessFakeThanUniformNoise) {
  torch::set_num_threads(1);
  Dataset d = testing::MakeMixedDataset(1500, 3);
  auto enc = std::make_shared<const Encoder>(Encoder::Fit(d.schema, d.rows));
  CriticConfig config = testing::TinyCriticConfig();
  config.max_epochs = 10;
  FakenessCritic critic = TrainCritic(d.rows, enc, config, 5);

  Dataset held = testing::MakeMixedDataset(300, 99);
  Rng rng(2);
  std::vector<Row> noise;
  for (int i = 0; i < 300; ++i) {
    noise.push_back({-100.0 + 300.0 * rng.Uniform(), static_cast<double>(rng.UniformInt(3)),
                     -20.0 + 40.0 * rng.Uniform(), static_cast<double>(rng.UniformInt(2))});
  }
  EXPECT_LT(Mean(critic.Score(held.rows)), Mean(critic.Score(noise)));

  const auto ref = ComputeFakenessReference(critic, held.rows);
  EXPECT_EQ(ref.count, 300u);
  EXPECT_NEAR(ref.mean, Mean(critic.Score(held.rows)), 1e-12);
}

TEST(FakenessCriticTest, DeterministicTrainingAndScoring) {
  torch::set_num_threads(1);
  Dataset d = testing::MakeMixedDataset(300, 3);
  auto enc = std::make_shared<const Encoder>(Encoder::Fit(d.schema, d.rows));
  FakenessCritic a = TrainCritic(d.rows, enc, testing::TinyCriticConfig(), 5);
  FakenessCritic b = TrainCritic(d.rows, enc, testing::TinyCriticConfig(), 5);
  EXPECT_EQ(a.Score(d.rows), b.Score(d.rows));
  EXPECT_EQ(a.Score(d.rows), a.Score(d.rows));
  EXPECT_EQ(a.curve(), b.curve());
}

TEST(FakenessCriticTest, RealismIsNegatedScoreInBothPrecisions) {
  torch::set_num_threads(1);
  Dataset d = testing::MakeMixedDataset(200, 4);
  auto enc = std::make_shared<const Encoder>(Encoder::Fit(d.schema, d.rows));
  FakenessCritic c = TrainCritic(d.rows, enc, testing::TinyCriticConfig(), 1);
  std::vector<Row> rows(d.rows.begin(), d.rows.begin() + 10);
  const auto scores = c.Score(rows);
  const auto x = nn::ToTensor(enc->Encode(rows));
  const auto r32 = c.Realism(x), r64 = c.Realism(x.to(torch::kFloat64));
  for (int64_t i = 0; i < 10; ++i) {
    EXPECT_NEAR(r32[i].item<double>(), -scores[i], 1e-6);
    EXPECT_NEAR(r64[i].item<double>(), -scores[i], 1e-4);
  }
}

}  // namespace
}  // namespace flexcf
