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

#include <algorithm>
#include <set>

#include "flexcf/common/error.h"
#include "flexcf/data/dataset.h"
#include "flexcf/data/ecdf.h"
#include "flexcf/data/encoder.h"
#include "flexcf/data/gmm.h"
#include "flexcf/data/synthetic.h"
#include "test_util.h"

namespace flexcf {
namespace {

using testing::MakeMixedDataset;
using testing::MixedSchema;

TEST(CsvTest, DropsRowsWithMissingCells) {
  std::string text = "a,b,y\n";
  for (int i = 0; i < 10; ++i) {
    std::string a = std::to_string(i), b = i % 2 ? "u" : "v";
    if (i == 3) a = "";
    if (i == 7) b = "?";
    text += a + "," + b + "," + (i % 3 ? "p" : "q") + "\n";
  }
  CsvLoadResult r = ParseCsv(text);
  EXPECT_EQ(r.dataset.size(), 8u);
  EXPECT_EQ(r.dropped_rows, 2u);
}

TEST(CsvTest, InfersCategoricalVocabulary) {
  CsvLoadResult r = ParseCsv("c,x,y\na,1,p\nb,2,q\na,3,p\n");
  const Schema& s = r.dataset.schema;
  ASSERT_EQ(s.num_features(), 2u);
  EXPECT_TRUE(s.column(0).is_categorical());
  EXPECT_EQ(s.column(0).categories, (std::vector<std::string>{"a", "b"}));
  EXPECT_FALSE(s.column(1).is_categorical());
  EXPECT_EQ(s.target(), "y");
}

TEST(CsvTest, UnknownCategoryUnderSchemaIsSchemaError) {
  const Schema schema = MixedSchema();
  EXPECT_THROW(ParseCsv("age,color,size,shape,label\n30,purple,0.1,circle,no\n", &schema), SchemaError);
}

TEST(CsvTest, UnparseableContinuousReportsRow) {
  const Schema schema = MixedSchema();
  try {
    ParseCsv("age,color,size,shape,label\n30,red,0.1,circle,no\nold,red,0.2,square,yes\n", &schema);
    FAIL() << "expected an ingestion error";
  } catch (const IngestError& e) {
    EXPECT_EQ(e.row_index(), 1u);
  }
}

TEST(CsvTest, AdultHeaderYieldsIncomeTarget) {
  CsvOptions options;
  options.target = "income";
  std::ifstream in(std::string(FLEXCF_DATA_DIR) + "/adult.csv");
  ASSERT_TRUE(in) << "data/adult.csv missing";
  std::string text, line;
  for (int i = 0; i < 400 && std::getline(in, line); ++i) text += line + "\n";
  CsvLoadResult r = ParseCsv(text, nullptr, options);
  EXPECT_EQ(r.dataset.schema.target(), "income");
  EXPECT_EQ(r.dataset.schema.target_classes(), (std::vector<std::string>{"<=50K", ">50K"}));
}

TEST(CsvTest, WriteThenReadRoundTrips) {
  Dataset d = MakeMixedDataset(20, 3);
  CsvLoadResult r = ParseCsv(FormatCsv(d), &d.schema);
  EXPECT_EQ(r.dataset.rows, d.rows);
  EXPECT_EQ(r.dataset.labels, d.labels);
}

TEST(SchemaTest, RejectsSingleCategoryColumn) {
  EXPECT_THROW(Schema({{"c", ColumnKind::kCategorical, {"only"}}}, "y", {"a", "b"}), SchemaError);
}

TEST(SchemaTest, RejectsTargetAmongFeatures) {
  EXPECT_THROW(Schema({{"y", ColumnKind::kContinuous, {}}}, "y", {"a", "b"}), SchemaError);
}

TEST(SchemaTest, JsonRoundTripAndStableHash) {
  const Schema s = MixedSchema();
  const Schema back = Schema::FromJson(s.ToJson());
  EXPECT_TRUE(back == s);
  EXPECT_EQ(back.Hash(), s.Hash());
  EXPECT_EQ(s.Hash().size(), 16u);
}

TEST(SchemaTest, RowJsonNamesOffendingColumn) {
  const Schema s = MixedSchema();
  nlohmann::json row = {{"age", 30}, {"color", "red"}, {"size", 0.5}, {"shape", "oval"}};
  try {
    s.RowFromJson(row);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "shape");
  }
}

TEST(SplitTest, ExactFractionsForHundredRows) {
  SplitDataset s = Split(MakeMixedDataset(100, 1), 0);
  EXPECT_EQ(s.train.size(), 60u);
  EXPECT_EQ(s.validation.size(), 20u);
  EXPECT_EQ(s.test.size(), 20u);
}

TEST(SplitTest, RoundingForHundredAndOneRows) {
  SplitDataset s = Split(MakeMixedDataset(101, 1), 0);
  EXPECT_NEAR(static_cast<double>(s.train.size()), 60.6, 1.0);
  EXPECT_NEAR(static_cast<double>(s.validation.size()), 20.2, 1.0);
  EXPECT_NEAR(static_cast<double>(s.test.size()), 20.2, 1.0);
  EXPECT_EQ(s.train.size() + s.validation.size() + s.test.size(), 101u);
}

TEST(SplitTest, TooFewRowsThrows) { EXPECT_THROW(Split(MakeMixedDataset(4, 1), 0), UserError); }

TEST(SplitTest, DeterministicAndDisjointUnderManySeeds) {
  // Rows are unique (continuous size draw), so row identity tracks source index.
  Dataset d = MakeMixedDataset(57, 9);
  for (uint64_t seed = 0; seed < 25; ++seed) {
    SplitDataset a = Split(d, seed), b = Split(d, seed);
    EXPECT_EQ(a.train.rows, b.train.rows);
    EXPECT_EQ(a.test.rows, b.test.rows);
    std::set<Row> seen;
    for (const auto* part : {&a.train, &a.validation, &a.test}) {
      for (const Row& r : part->rows) EXPECT_TRUE(seen.insert(r).second) << "seed " << seed;
    }
    EXPECT_EQ(seen.size(), d.size());
  }
}

TEST(EncoderTest, StandardizeWidthsAndRoundTrip) {
  Dataset d = MakeMixedDataset(200, 2);
  Encoder enc = Encoder::Fit(d.schema, d.rows);
  EXPECT_EQ(enc.width(), 1u + 3u + 1u + 2u);
  for (const Row& r : d.rows) {
    Row back = enc.DecodeRow(enc.EncodeRow(r));
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (d.schema.column(j).is_categorical()) {
        EXPECT_EQ(back[j], r[j]);
      } else {
        EXPECT_NEAR(back[j], r[j], 1e-9 * std::max(1.0, std::abs(r[j])));
      }
    }
  }
}

TEST(EncoderTest, HardBlocksAreOneHot) {
  Dataset d = MakeMixedDataset(100, 4);
  Encoder enc = Encoder::Fit(d.schema, d.rows);
  for (const Row& r : d.rows) {
    const std::vector<double> e = enc.EncodeRow(enc.DecodeRow(enc.EncodeRow(r)));
    for (const ColumnBlock& b : enc.blocks()) {
      if (!d.schema.column(b.column).is_categorical()) continue;
      double sum = 0;
      int ones = 0;
      for (std::size_t k = 0; k < b.width; ++k) {
        const double v = e[b.offset + k];
        EXPECT_TRUE(v == 0.0 || v == 1.0);
        sum += v;
        ones += v == 1.0;
      }
      EXPECT_EQ(sum, 1.0);
      EXPECT_EQ(ones, 1);
    }
  }
}

TEST(EncoderTest, StdFloorOnConstantColumn) {
  Schema s({{"k", ColumnKind::kContinuous, {}}}, "y", {"a", "b"});
  std::vector<Row> rows(10, Row{3.0});
  Encoder enc = Encoder::Fit(s, rows);
  EXPECT_EQ(enc.stddev(0), kStdFloor);
  EXPECT_EQ(enc.EncodeRow({3.0})[0], 0.0);
  EXPECT_EQ(enc.DecodeRow(enc.EncodeRow({3.0}))[0], 3.0);
}

TEST(EncoderTest, GmmModeLayoutAndConstantFallback) {
  Schema s({{"bimodal", ColumnKind::kContinuous, {}}, {"flat", ColumnKind::kContinuous, {}}}, "y", {"a", "b"});
  Rng rng(5);
  std::vector<Row> rows;
  for (int i = 0; i < 400; ++i) rows.push_back({(i % 2 ? 10.0 : -10.0) + 0.5 * rng.Normal(), 1.0});
  Encoder enc = Encoder::Fit(s, rows, TransformMode::kGmm);
  EXPECT_GE(enc.mixture(0).num_components(), 2u);
  EXPECT_EQ(enc.mixture(1).num_components(), 1u);
  EXPECT_EQ(enc.block(0).width, 1 + enc.mixture(0).num_components());
  Row back = enc.DecodeRow(enc.EncodeRow(rows[0]));
  EXPECT_NEAR(back[0], rows[0][0], 1e-6);
}

TEST(EncoderTest, JsonRoundTrip) {
  Dataset d = MakeMixedDataset(100, 6);
  Encoder enc = Encoder::Fit(d.schema, d.rows);
  Encoder back = Encoder::FromJson(enc.ToJson(), d.schema);
  EXPECT_EQ(back.EncodeRow(d.rows[3]), enc.EncodeRow(d.rows[3]));
}

TEST(EcdfTest, MidRankTies) {
  Schema s({{"v", ColumnKind::kContinuous, {}}}, "y", {"a", "b"});
  std::vector<Row> rows = {{1.0}, {2.0}, {2.0}, {3.0}};
  EmpiricalCdf cdf = EmpiricalCdf::Fit(s, rows);
  EXPECT_DOUBLE_EQ(cdf.Evaluate(0, 2.0), (1 + 0.5 * 2) / 4.0);
  EXPECT_DOUBLE_EQ(cdf.Evaluate(0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(cdf.Evaluate(0, 9.0), 1.0);
}

TEST(EcdfTest, MonotoneAndBounded) {
  Dataset d = MakeMixedDataset(300, 7);
  EmpiricalCdf cdf = EmpiricalCdf::Fit(d.schema, d.rows);
  Rng rng(1);
  std::vector<double> q;
  for (int i = 0; i < 500; ++i) q.push_back(-3 + 6 * rng.Uniform());
  std::sort(q.begin(), q.end());
  double prev = -1;
  for (double v : q) {
    const double c = cdf.Evaluate(2, v);
    EXPECT_GE(c, prev);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
    prev = c;
  }
}

TEST(EcdfTest, CategoricalColumnThrows) {
  Dataset d = MakeMixedDataset(30, 7);
  EmpiricalCdf cdf = EmpiricalCdf::Fit(d.schema, d.rows);
  EXPECT_THROW(cdf.Evaluate(1, 0.0), SchemaError);
}

TEST(GmmTest, SeparatesTwoModes) {
  Rng rng(2);
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back((i % 4 == 0 ? 5.0 : -5.0) + rng.Normal());
  GaussianMixture1D g = GaussianMixture1D::Fit(v);
  ASSERT_EQ(g.num_components(), 2u);
  std::vector<double> means = g.means();
  std::sort(means.begin(), means.end());
  EXPECT_NEAR(means[0], -5.0, 0.2);
  EXPECT_NEAR(means[1], 5.0, 0.3);
  const std::vector<double> r = g.Responsibilities(5.0);
  EXPECT_NEAR(r[0] + r[1], 1.0, 1e-12);
}

TEST(GmmTest, DigammaKnownValues) {
  EXPECT_NEAR(Digamma(1.0), -0.5772156649015329, 1e-12);
  EXPECT_NEAR(Digamma(0.5), -1.9635100260214235, 1e-12);
}

TEST(SyntheticTest, SeparableDatasetShape) {
  Dataset d = MakeSeparableDataset(1000, 3);
  EXPECT_EQ(d.size(), 1000u);
  EXPECT_EQ(d.schema.num_features(), 2u);
  EXPECT_EQ(d.schema.target_classes(), (std::vector<std::string>{"neg", "pos"}));
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d.labels[i], d.rows[i][0] + d.rows[i][1] > 0 ? 1 : 0);
  }
}

}  // namespace
}  // namespace flexcf
