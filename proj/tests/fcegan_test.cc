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

#include <atomic>
#include <set>

#include "flexcf/common/error.h"
#include "flexcf/gan/fcegan.h"
#include "flexcf/io/checkpoint.h"
#include "test_util.h"

namespace flexcf {
namespace {

using testing::MakeMixedDataset;

class CountingOracle : public LabelOracle {
 public:
  explicit CountingOracle(const ClassifierModel& model) : model_(model) {}
  std::vector<int> PredictClasses(std::span<const Row> rows) const override {
    ++calls;
    return model_.PredictClasses(rows);
  }
  mutable std::atomic<int> calls{0};

 private:
  const ClassifierModel& model_;
};

class TrainedFcegan : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    torch::set_num_threads(1);
    split_ = new SplitDataset(Split(MakeMixedDataset(1000, 4), 0));
    auto enc = std::make_shared<const Encoder>(Encoder::Fit(split_->train.schema, split_->train.rows));
    classifier_ = std::make_shared<const ClassifierModel>(
        TrainClassifier(*split_, enc, testing::TinyClassifierConfig(), 1));
    model_ = new FceganModel(TrainFcegan(*split_, classifier_, testing::TinyFceganConfig(), 2));
  }
  static void TearDownTestSuite() {
    delete model_;
    delete split_;
    classifier_.reset();
  }
  static SplitDataset* split_;
  static std::shared_ptr<const ClassifierModel> classifier_;
  static FceganModel* model_;
};
SplitDataset* TrainedFcegan::split_ = nullptr;
std::shared_ptr<const ClassifierModel> TrainedFcegan::classifier_;
FceganModel* TrainedFcegan::model_ = nullptr;

TEST_F(TrainedFcegan, ImmutableColumnsNeverChange) {
  Rng rng(17);
  const Schema& schema = model_->schema();
  for (std::size_t i = 0; i < 40; ++i) {
    const Row& x = split_->test.rows[i];
    std::vector<bool> mask(schema.num_features());
    for (std::size_t j = 0; j < mask.size(); ++j) mask[j] = rng.Uniform() < 0.5;
    const int pred = classifier_->PredictClasses(std::vector<Row>{x})[0];
    const auto tmpl = MakeTemplate(schema, x, mask, 1 - pred);
    const auto out = model_->GenerateOne(x, tmpl, 5, 100 + i);
    ASSERT_EQ(out.candidates.size(), 5u);
    for (const Row& c : out.candidates) {
      for (std::size_t j = 0; j < mask.size(); ++j) {
        if (!mask[j]) EXPECT_EQ(c[j], x[j]) << "row " << i << " column " << j;
      }
    }
  }
}

TEST_F(TrainedFcegan, EmptyMutableSetReturnsOriginal) {
  const Schema& schema = model_->schema();
  for (std::size_t i = 0; i < 10; ++i) {
    const Row& x = split_->test.rows[i];
    const int pred = classifier_->PredictClasses(std::vector<Row>{x})[0];
    for (int desired : {0, 1}) {
      const auto tmpl = MakeTemplate(schema, x, std::vector<bool>(schema.num_features(), false), desired);
      const auto out = model_->GenerateOne(x, tmpl, 3, i);
      for (std::size_t k = 0; k < out.candidates.size(); ++k) {
        EXPECT_EQ(out.candidates[k], x);
        EXPECT_EQ(out.predictions[k].predicted_class == desired, pred == desired);
      }
    }
  }
}

TEST_F(TrainedFcegan, FreshNoisePerCandidateAndSeedDeterminism) {
  const Schema& schema = model_->schema();
  const Row& x = split_->test.rows[0];
  const auto tmpl = MakeTemplate(schema, x, std::vector<bool>(schema.num_features(), true), 1);
  const auto a = model_->GenerateOne(x, tmpl, 5, 9);
  const auto b = model_->GenerateOne(x, tmpl, 5, 9);
  ASSERT_EQ(a.candidates.size(), 5u);
  EXPECT_EQ(a.candidates, b.candidates);
  std::set<Row> distinct(a.candidates.begin(), a.candidates.end());
  EXPECT_GT(distinct.size(), 1u);
  EXPECT_NE(model_->GenerateOne(x, tmpl, 5, 10).candidates, a.candidates);
}

TEST_F(TrainedFcegan, ContinuousOutputsStayInTrainingRange) {
  const Schema& schema = model_->schema();
  std::vector<double> lo(schema.num_features(), 1e300), hi(schema.num_features(), -1e300);
  for (const Row& r : split_->train.rows) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      lo[j] = std::min(lo[j], r[j]);
      hi[j] = std::max(hi[j], r[j]);
    }
  }
  const Row& x = split_->test.rows[3];
  const auto tmpl = MakeTemplate(schema, x, std::vector<bool>(schema.num_features(), true), 0);
  for (const Row& c : model_->GenerateOne(x, tmpl, 50, 1).candidates) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      EXPECT_GE(c[j], lo[j]);
      EXPECT_LE(c[j], hi[j]);
    }
  }
}

TEST_F(TrainedFcegan, ValidFlagsMatchClassifier) {
  const Schema& schema = model_->schema();
  std::vector<GenerationRequest> requests;
  for (std::size_t i = 0; i < 20; ++i) {
    const Row& x = split_->test.rows[i];
    requests.push_back({x, MakeTemplate(schema, x, std::vector<bool>(schema.num_features(), true), 1), {}});
  }
  for (const auto& inst : model_->Generate(requests, 4, 5)) {
    const auto live = classifier_->PredictClasses(inst.candidates);
    for (std::size_t k = 0; k < live.size(); ++k) EXPECT_EQ(inst.predictions[k].predicted_class, live[k]);
  }
}

TEST_F(TrainedFcegan, SchemaMismatchThrows) {
  Row short_row = {30.0, 1.0};
  CounterfactualTemplate tmpl;
  tmpl.mutable_mask = {true, true};
  tmpl.frozen_values = {std::nullopt, std::nullopt};
  EXPECT_THROW(model_->GenerateOne(short_row, tmpl, 1, 0), SchemaError);
}

TEST_F(TrainedFcegan, HistoryPoolsEqualLivePools) {
  const PredictionHistory history = ExportHistory(*classifier_, split_->train.rows);
  std::vector<int> from_history;
  for (const auto& r : history.records) from_history.push_back(r.predicted_class);
  const auto live = classifier_->PredictClasses(split_->train.rows);
  EXPECT_EQ(BuildClassPools(from_history, 2), BuildClassPools(live, 2));
}

TEST_F(TrainedFcegan, BlackBoxTouchesModelOnlyThroughLabels) {
  const PredictionHistory history = ExportHistory(*classifier_, split_->train.rows);
  CountingOracle oracle(*classifier_);
  BlackBoxValidation validation{split_->validation.rows, &oracle};
  FceganModel bb = TrainFceganBlackBox(history, classifier_->shared_encoder(),
                                       testing::TinyFceganConfig(FceganMode::kBlackBox), 3, &validation);
  EXPECT_EQ(bb.classifier(), nullptr);
  EXPECT_EQ(bb.config().lambda_clas, 0.0);
  // One call labels the validation originals, then two passes (full and
  // quarter mutability) per epoch.
  EXPECT_EQ(oracle.calls.load(), 1 + 2 * static_cast<int>(bb.curve().size()));
  // Without a linked classifier, generation is unverified.
  const Row& x = split_->test.rows[0];
  const auto tmpl = MakeTemplate(bb.schema(), x, std::vector<bool>(bb.schema().num_features(), true), 1);
  EXPECT_TRUE(bb.GenerateOne(x, tmpl, 2, 0).predictions.empty());
}

TEST(FceganTrainingTest, BlackBoxRejectsClassifierModeConfig) {
  Dataset d = MakeMixedDataset(100, 1);
  auto enc = std::make_shared<const Encoder>(Encoder::Fit(d.schema, d.rows));
  PredictionHistory history;
  history.schema = d.schema;
  history.records.push_back({d.rows[0], 0, {1.0, 0.0}});
  EXPECT_THROW(TrainFceganBlackBox(history, enc, testing::TinyFceganConfig(), 0), ConfigError);
}

TEST(FceganTrainingTest, SameSeedGivesIdenticalCheckpoints) {
  torch::set_num_threads(1);
  SplitDataset split = Split(MakeMixedDataset(500, 8), 0);
  auto enc = std::make_shared<const Encoder>(Encoder::Fit(split.train.schema, split.train.rows));
  auto clf = std::make_shared<const ClassifierModel>(
      TrainClassifier(split, enc, testing::TinyClassifierConfig(), 1));
  const EmpiricalCdf cdf = EmpiricalCdf::Fit(split.train.schema, split.train.rows);
  testing::TempDir dir("fcegan_det");
  std::vector<std::string> bytes;
  for (int run = 0; run < 2; ++run) {
    FceganModel m = TrainFcegan(split, clf, testing::TinyFceganConfig(), 42);
    const std::string path = dir / ("m" + std::to_string(run) + ".ckpt");
    SaveFcegan(path, m, cdf);
    bytes.push_back(testing::ReadFile(path));
  }
  EXPECT_FALSE(bytes[0].empty());
  EXPECT_EQ(bytes[0], bytes[1]);
  FceganModel other = TrainFcegan(split, clf, testing::TinyFceganConfig(), 43);
  SaveFcegan(dir / "other.ckpt", other, cdf);
  EXPECT_NE(testing::ReadFile(dir / "other.ckpt"), bytes[0]);
}

TEST(PoolSamplerTest, DrawsOnlyFromRequestedPool) {
  Dataset d = MakeMixedDataset(200, 6);
  const auto pools = BuildClassPools(d.labels, 2);
  PoolSampler sampler(d.schema, d.rows, pools);
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const int cls = i % 2;
    const std::size_t idx = sampler.Sample(cls, rng);
    EXPECT_EQ(d.labels[idx], cls);
  }
}

}  // namespace
}  // namespace flexcf
