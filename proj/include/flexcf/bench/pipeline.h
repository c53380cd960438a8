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

#ifndef FLEXCF_BENCH_PIPELINE_H_
#define FLEXCF_BENCH_PIPELINE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flexcf/bench/bench.h"
#include "flexcf/classifier/classifier.h"
#include "flexcf/data/dataset.h"
#include "flexcf/data/ecdf.h"
#include "flexcf/data/encoder.h"
#include "flexcf/gan/critic.h"
#include "flexcf/gan/fcegan.h"
#include "flexcf/optim/rgd.h"
#include "json.hpp"

namespace flexcf {

struct PipelineConfig {
  // Empty: the separable synthetic dataset.
  std::string data_path;
  std::string target;
  std::size_t max_rows = 20000;
  std::size_t synthetic_rows = 5000;
  uint64_t split_seed = 0;
  // Seed of the classifier and the evaluation critic.
  uint64_t base_seed = 0;
  TransformMode transform = TransformMode::kStandardize;

  ClassifierConfig classifier;
  CriticConfig critic;
  FceganConfig fcegan;  // classifier-mode base; black-box derives from it
  OptimizerConfig rgd;
  // Black-box early stopping asks the classifier for validation labels.
  bool blackbox_validation = true;
  SweepOptions sweep;

  nlohmann::json ToJson() const;
};

Dataset LoadPipelineData(const PipelineConfig& config);

// Shared state of one benchmark: data split, classifier, evaluation critic
// and per-seed trained methods, each built once on first use.
class BenchPipeline {
 public:
  BenchPipeline(PipelineConfig config, Dataset data);

  const PipelineConfig& config() const { return config_; }
  const SplitDataset& split() const { return split_; }
  std::shared_ptr<const Encoder> encoder() const { return encoder_; }
  const EmpiricalCdf& cdf() const { return cdf_; }
  std::shared_ptr<const ClassifierModel> classifier();
  std::shared_ptr<const FakenessCritic> evaluation_critic();
  const FakenessReference& fakeness_reference();
  int desired_class() const;
  SweepEnvironment Environment();

  // Trained on the seed; cached by config and seed.
  std::shared_ptr<const FceganModel> Fcegan(const FceganConfig& config, uint64_t seed);
  FceganConfig FceganConfigFor(const std::string& method_id) const;
  // Realism term of RGD, trained per seed.
  std::shared_ptr<const FakenessCritic> RgdCritic(uint64_t seed);

  MethodProvider Provider(const std::string& method_id);
  MethodProvider FceganProvider(const std::string& variant, const FceganConfig& config);
  MethodProvider RgdProvider(const std::string& id, const OptimizerConfig& config);

  SweepResult Run(const std::string& method_id);
  // One result per constraint level, named <mode method>_lambda_m_<value>.
  std::vector<SweepResult> RunDivergenceStudy(FceganMode mode);

 private:
  PipelineConfig config_;
  SplitDataset split_;
  std::shared_ptr<const Encoder> encoder_;
  EmpiricalCdf cdf_;
  std::shared_ptr<const ClassifierModel> classifier_;
  std::shared_ptr<const FakenessCritic> eval_critic_;
  std::optional<FakenessReference> reference_;
  std::optional<PredictionHistory> history_;
  std::optional<std::vector<Row>> instances_;
  std::map<std::pair<std::string, uint64_t>, std::shared_ptr<const FceganModel>> fcegans_;  // (config json, seed)
  std::map<uint64_t, std::shared_ptr<const FakenessCritic>> rgd_critics_;
};

}  // namespace flexcf

#endif  // FLEXCF_BENCH_PIPELINE_H_
