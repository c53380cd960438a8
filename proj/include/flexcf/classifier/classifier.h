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

#ifndef FLEXCF_CLASSIFIER_CLASSIFIER_H_
#define FLEXCF_CLASSIFIER_CLASSIFIER_H_

#include <torch/torch.h>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flexcf/data/dataset.h"
#include "flexcf/data/encoder.h"
#include "flexcf/metrics/metrics.h"
#include "flexcf/nn/modules.h"
#include "json.hpp"

namespace flexcf {

struct ClassifierConfig {
  std::vector<int64_t> hidden_dims = {512, 512};
  int64_t batch_size = 300;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int max_epochs = 10;
  bool class_weighting = true;

  void Validate() const;
  nlohmann::json ToJson() const;
  static ClassifierConfig FromJson(const nlohmann::json& json);
};

struct ClassifierEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_accuracy = 0.0;
};

// Inverse-frequency class weights scaled so the average per-sample weight
// is 1: w_c = n / (K * n_c). Classes absent from the data get weight 0.
std::vector<double> InverseFrequencyWeights(std::span<const int> labels, std::size_t num_classes);

// mean_i w[y_i] * CE(logits_i, y_i).
torch::Tensor WeightedCrossEntropy(const torch::Tensor& logits, const torch::Tensor& labels,
                                   const torch::Tensor& class_weights);

// Trained reference MLP. Immutable after training; inference is safe from
// several threads.
class ClassifierModel {
 public:
  ClassifierModel(std::shared_ptr<const Encoder> encoder, ClassifierConfig config);

  const Schema& schema() const { return encoder_->schema(); }
  const Encoder& encoder() const { return *encoder_; }
  std::shared_ptr<const Encoder> shared_encoder() const { return encoder_; }
  const ClassifierConfig& config() const { return config_; }
  const std::vector<ClassifierEpoch>& curve() const { return curve_; }
  int best_epoch() const { return best_epoch_; }

  // Differentiable logits w.r.t. `encoded` ([B, D], float32 or float64).
  // Parameters never receive gradients.
  torch::Tensor Logits(const torch::Tensor& encoded) const;

  // Argmax ties go to the lowest class index; probabilities are a double
  // softmax of the logits.
  std::vector<CandidatePrediction> Predict(const Matrix& encoded) const;
  CandidatePrediction PredictOne(std::span<const double> encoded) const;
  std::vector<CandidatePrediction> PredictRows(std::span<const Row> rows) const;
  std::vector<int> PredictClasses(std::span<const Row> rows) const;

  double Accuracy(const Dataset& data) const;

  // Checkpoint support.
  nn::Mlp& network() { return net_; }
  const nn::Mlp& network() const { return net_; }
  void set_curve(std::vector<ClassifierEpoch> curve, int best_epoch);

 private:
  std::shared_ptr<const Encoder> encoder_;
  ClassifierConfig config_;
  mutable nn::Mlp net_{nullptr};
  std::vector<ClassifierEpoch> curve_;
  int best_epoch_ = -1;
};

nlohmann::json CurveToJson(const std::vector<ClassifierEpoch>& curve);
std::vector<ClassifierEpoch> ClassifierCurveFromJson(const nlohmann::json& json);

// Adam on inverse-frequency weighted cross-entropy; returns the epoch with
// the best validation accuracy. The encoder must be fitted on split.train.
ClassifierModel TrainClassifier(const SplitDataset& split, std::shared_ptr<const Encoder> encoder,
                                const ClassifierConfig& config, uint64_t seed);

// Historical predictions: the only view of the classifier available to
// black-box training.
struct PredictionRecord {
  Row instance;
  int predicted_class = 0;
  std::vector<double> class_probabilities;
};

struct PredictionHistory {
  Schema schema;
  std::vector<PredictionRecord> records;

  // Records predicted as `cls`.
  std::vector<std::size_t> IndicesOfClass(int cls) const;
};

PredictionHistory ExportHistory(const ClassifierModel& model, std::span<const Row> rows);

// Features, then `predicted_class` (label) and one `prob_<label>` column per class.
void WriteHistoryCsv(const std::string& path, const PredictionHistory& history);
PredictionHistory LoadHistoryCsv(const std::string& path, const Schema& schema);

// counts[i][j] = rows of true class i predicted as j.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;
ConfusionMatrix ComputeConfusionMatrix(const ClassifierModel& model, const Dataset& data);

}  // namespace flexcf

#endif  // FLEXCF_CLASSIFIER_CLASSIFIER_H_
