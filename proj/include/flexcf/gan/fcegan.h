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

#ifndef FLEXCF_GAN_FCEGAN_H_
#define FLEXCF_GAN_FCEGAN_H_

#include <torch/torch.h>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "flexcf/cf/template.h"
#include "flexcf/classifier/classifier.h"
#include "flexcf/common/rng.h"
#include "flexcf/data/encoder.h"
#include "flexcf/metrics/metrics.h"
#include "flexcf/nn/layout.h"
#include "flexcf/nn/modules.h"
#include "json.hpp"

namespace flexcf {

enum class FceganMode { kClassifier, kBlackBox };
std::string_view FceganModeName(FceganMode mode);
FceganMode ParseFceganMode(std::string_view name);

struct FceganConfig {
  std::vector<int64_t> gen_hidden = {256, 256};
  std::vector<int64_t> disc_hidden = {256, 256};
  int64_t pac = 10;
  int disc_steps = 1;
  double lr_gen = 2e-4;
  double lr_disc = 2e-4;
  double weight_decay = 1e-6;
  double beta1 = 0.5;
  double beta2 = 0.9;
  int64_t batch_size = 500;
  int max_epochs = 100;
  // Epochs without a better validation score before stopping.
  int patience = 20;
  double gp_coefficient = 10.0;
  int64_t noise_dim = 128;
  double lambda_clas = 1.0;
  double lambda_og = 0.5;
  double lambda_cf = 0.5;
  double lambda_m = 0.0;
  double lambda_i = 0.0;
  double tau = 0.2;
  double dropout = 0.5;
  FceganMode mode = FceganMode::kClassifier;
  // false: trained on full-mutability templates only (no template knowledge);
  // templates are then applied after generation.
  bool template_aware = true;
  // Validation rows used by early stopping.
  std::size_t validation_cap = 500;

  // Black-box mode zeroes lambda_clas.
  static FceganConfig ForMode(FceganMode mode);
  void Validate() const;
  nlohmann::json ToJson() const;
  static FceganConfig FromJson(const nlohmann::json& json);
};

struct FceganEpoch {
  int epoch = 0;
  double critic_og_loss = 0.0;
  double critic_cf_loss = 0.0;
  double gradient_penalty = 0.0;
  double generator_loss = 0.0;
  double divergence_loss = 0.0;
  // Validation valid fraction at full and at 25% mutability and their mean;
  // absent when no validation oracle was available.
  std::optional<double> valid_full;
  std::optional<double> valid_quarter;
  std::optional<double> score;
};

nlohmann::json FceganCurveToJson(const std::vector<FceganEpoch>& curve);
std::vector<FceganEpoch> FceganCurveFromJson(const nlohmann::json& json);

// Label-only view of a model (the black-box contract).
class LabelOracle {
 public:
  virtual ~LabelOracle() = default;
  virtual std::vector<int> PredictClasses(std::span<const Row> rows) const = 0;
};

class ClassifierOracle : public LabelOracle {
 public:
  explicit ClassifierOracle(const ClassifierModel& model) : model_(model) {}
  std::vector<int> PredictClasses(std::span<const Row> rows) const override {
    return model_.PredictClasses(rows);
  }

 private:
  const ClassifierModel& model_;
};

struct GenerationRequest {
  Row instance;
  CounterfactualTemplate tmpl;
  // Class currently predicted for the instance. When absent it comes from
  // the linked classifier, or is spread uniformly over the classes other
  // than the desired one.
  std::optional<int> predicted_class;
};

class FceganModel {
 public:
  FceganModel(std::shared_ptr<const Encoder> encoder, FceganConfig config,
              std::shared_ptr<const ClassifierModel> classifier);

  const Schema& schema() const { return encoder_->schema(); }
  const Encoder& encoder() const { return *encoder_; }
  std::shared_ptr<const Encoder> shared_encoder() const { return encoder_; }
  const FceganConfig& config() const { return config_; }
  const ClassifierModel* classifier() const { return classifier_.get(); }
  std::shared_ptr<const ClassifierModel> shared_classifier() const { return classifier_; }
  void set_classifier(std::shared_ptr<const ClassifierModel> classifier);
  const std::vector<FceganEpoch>& curve() const { return curve_; }
  int best_epoch() const { return best_epoch_; }

  int64_t input_width() const;

  // n candidates per request, seeded. Candidates are hard-decoded, clamped
  // to the training range and reset to every immutable value. Predictions
  // come from the linked classifier, else from `validator` (labels only),
  // else are left empty (unverified).
  std::vector<InstanceCandidates> Generate(std::span<const GenerationRequest> requests,
                                           std::size_t n, uint64_t seed,
                                           const LabelOracle* validator = nullptr) const;
  InstanceCandidates GenerateOne(const Row& instance, const CounterfactualTemplate& tmpl,
                                 std::size_t n, uint64_t seed) const;

  nn::ResidualGenerator& generator() { return generator_; }
  nn::PacCritic& critic_og() { return critic_og_; }
  nn::PacCritic& critic_cf() { return critic_cf_; }
  const nn::SegmentLayout& layout() const { return layout_; }
  void set_curve(std::vector<FceganEpoch> curve, int best_epoch);

  // Builds the generator input [x_og, predicted, masked, indicator, desired, noise].
  torch::Tensor GeneratorInput(const torch::Tensor& original, const torch::Tensor& predicted,
                               const torch::Tensor& column_mask, const torch::Tensor& desired,
                               const torch::Tensor& noise) const;

 private:
  std::shared_ptr<const Encoder> encoder_;
  FceganConfig config_;
  std::shared_ptr<const ClassifierModel> classifier_;
  nn::SegmentLayout layout_;
  mutable nn::ResidualGenerator generator_{nullptr};
  nn::PacCritic critic_og_{nullptr};
  nn::PacCritic critic_cf_{nullptr};
  std::vector<FceganEpoch> curve_;
  int best_epoch_ = -1;
};

// Training-by-sampling over class pools: pick a categorical column
// uniformly, then a category with probability proportional to
// log(1 + count) within the pool, then a pool row carrying it.
class PoolSampler {
 public:
  // pools[c] = row indices (into `rows`) predicted as class c.
  PoolSampler(const Schema& schema, std::span<const Row> rows,
              std::vector<std::vector<std::size_t>> pools);
  bool empty(int cls) const { return pools_.at(static_cast<std::size_t>(cls)).empty(); }
  const std::vector<std::size_t>& pool(int cls) const { return pools_.at(static_cast<std::size_t>(cls)); }
  std::size_t Sample(int cls, Rng& rng) const;

 private:
  struct CategoryTable {
    std::vector<double> cumulative;
    std::vector<std::vector<std::size_t>> rows;
  };
  std::vector<std::vector<std::size_t>> pools_;
  // [class][categorical column]
  std::vector<std::vector<CategoryTable>> tables_;
};

// pools[c] = indices i with predicted[i] == c.
std::vector<std::vector<std::size_t>> BuildClassPools(std::span<const int> predicted,
                                                      std::size_t num_classes);

// Classifier mode: originals are split.train, predictions and the
// classifier-loss term come from the live classifier.
FceganModel TrainFcegan(const SplitDataset& split, std::shared_ptr<const ClassifierModel> classifier,
                        const FceganConfig& config, uint64_t seed);

struct BlackBoxValidation {
  std::vector<Row> rows;
  const LabelOracle* oracle = nullptr;
};

// Black-box mode: the history records are the only model interface. With
// `validation`, early stopping queries labels of generated validation
// candidates; without it the last epoch is kept.
FceganModel TrainFceganBlackBox(const PredictionHistory& history,
                                std::shared_ptr<const Encoder> encoder, const FceganConfig& config,
                                uint64_t seed, const BlackBoxValidation* validation = nullptr);

}  // namespace flexcf

#endif  // FLEXCF_GAN_FCEGAN_H_
