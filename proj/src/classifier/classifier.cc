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

#include "flexcf/classifier/classifier.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "flexcf/common/error.h"
#include "flexcf/common/log.h"
#include "flexcf/common/rng.h"
#include "flexcf/nn/layout.h"

namespace flexcf {

void ClassifierConfig::Validate() const {
  if (hidden_dims.empty()) throw ConfigError("classifier.hidden_dims must not be empty");
  for (int64_t h : hidden_dims) {
    if (h <= 0) throw ConfigError("classifier.hidden_dims must be positive");
  }
  if (batch_size <= 0 || learning_rate <= 0 || max_epochs <= 0 || beta1 <= 0 || beta2 <= 0 ||
      beta1 >= 1 || beta2 >= 1) {
    throw ConfigError("classifier hyperparameters must be positive (betas in (0,1))");
  }
}

nlohmann::json ClassifierConfig::ToJson() const {
  return {{"hidden_dims", hidden_dims}, {"batch_size", batch_size},
          {"learning_rate", learning_rate}, {"adam_betas", {beta1, beta2}},
          {"max_epochs", max_epochs}, {"class_weighting", class_weighting}};
}

ClassifierConfig ClassifierConfig::FromJson(const nlohmann::json& j) {
  ClassifierConfig c;
  c.hidden_dims = j.at("hidden_dims").get<std::vector<int64_t>>();
  c.batch_size = j.at("batch_size").get<int64_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("adam_betas").at(0).get<double>();
  c.beta2 = j.at("adam_betas").at(1).get<double>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.class_weighting = j.at("class_weighting").get<bool>();
  return c;
}

std::vector<double> InverseFrequencyWeights(std::span<const int> labels, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
  std::size_t present = 0;
  for (std::size_t c : counts) present += c > 0;
  std::vector<double> weights(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) continue;
    weights[c] = static_cast<double>(labels.size()) /
                 (static_cast<double>(present) * static_cast<double>(counts[c]));
  }
  return weights;
}

torch::Tensor WeightedCrossEntropy(const torch::Tensor& logits, const torch::Tensor& labels,
                                   const torch::Tensor& class_weights) {
  const auto per_sample = torch::nn::functional::cross_entropy(
      logits, labels, torch::nn::functional::CrossEntropyFuncOptions().reduction(torch::kNone));
  return (per_sample * class_weights.to(logits.dtype()).index_select(0, labels)).mean();
}

ClassifierModel::ClassifierModel(std::shared_ptr<const Encoder> encoder, ClassifierConfig config)
    : encoder_(std::move(encoder)), config_(std::move(config)) {
  net_ = nn::Mlp(static_cast<int64_t>(encoder_->width()), config_.hidden_dims,
                 static_cast<int64_t>(encoder_->schema().num_classes()));
  net_->eval();
}

torch::Tensor ClassifierModel::Logits(const torch::Tensor& encoded) const {
  TORCH_CHECK(encoded.dim() == 2 && encoded.size(1) == static_cast<int64_t>(encoder_->width()),
              "classifier input has wrong width");
  if (encoded.scalar_type() == torch::kFloat64) {
    // Double-precision evaluation for gradient checks: run a double copy.
    nn::Mlp copy(static_cast<int64_t>(encoder_->width()), config_.hidden_dims,
                 static_cast<int64_t>(encoder_->schema().num_classes()));
    nn::RestoreState(*copy, nn::CaptureState(*net_), "classifier");
    copy->to(torch::kFloat64);
    copy->eval();
    nn::FreezeParameters(*copy);
    return copy->forward(encoded);
  }
  return net_->forward(encoded);
}

std::vector<CandidatePrediction> ClassifierModel::Predict(const Matrix& encoded) const {
  if (encoded.cols != encoder_->width()) {
    throw SchemaError("encoded width " + std::to_string(encoded.cols) + " does not match classifier input " +
                      std::to_string(encoder_->width()));
  }
  std::vector<CandidatePrediction> out;
  if (encoded.rows == 0) return out;
  torch::NoGradGuard no_grad;
  const auto logits = net_->forward(nn::ToTensor(encoded)).to(torch::kFloat64).contiguous();
  const int64_t k = logits.size(1);
  const double* data = logits.data_ptr<double>();
  out.reserve(encoded.rows);
  for (std::size_t i = 0; i < encoded.rows; ++i) {
    const double* row = data + static_cast<int64_t>(i) * k;
    const double max_logit = *std::max_element(row, row + k);
    CandidatePrediction pred;
    pred.probabilities.resize(static_cast<std::size_t>(k));
    double total = 0.0;
    for (int64_t c = 0; c < k; ++c) total += pred.probabilities[c] = std::exp(row[c] - max_logit);
    for (double& p : pred.probabilities) p /= total;
    pred.predicted_class = 0;
    for (int64_t c = 1; c < k; ++c) {
      if (row[c] > row[pred.predicted_class]) pred.predicted_class = static_cast<int>(c);
    }
    out.push_back(std::move(pred));
  }
  return out;
}

CandidatePrediction ClassifierModel::PredictOne(std::span<const double> encoded) const {
  Matrix m(1, encoded.size());
  std::copy(encoded.begin(), encoded.end(), m.data.begin());
  return Predict(m).front();
}

std::vector<CandidatePrediction> ClassifierModel::PredictRows(std::span<const Row> rows) const {
  return Predict(encoder_->Encode(rows));
}

std::vector<int> ClassifierModel::PredictClasses(std::span<const Row> rows) const {
  std::vector<int> classes;
  for (const auto& p : PredictRows(rows)) classes.push_back(p.predicted_class);
  return classes;
}

double ClassifierModel::Accuracy(const Dataset& data) const {
  if (data.size() == 0) return 0.0;
  const std::vector<int> pred = PredictClasses(data.rows);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.labels[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

void ClassifierModel::set_curve(std::vector<ClassifierEpoch> curve, int best_epoch) {
  curve_ = std::move(curve);
  best_epoch_ = best_epoch;
}

nlohmann::json CurveToJson(const std::vector<ClassifierEpoch>& curve) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : curve) {
    j.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss},
                 {"validation_accuracy", e.validation_accuracy}});
  }
  return j;
}

std::vector<ClassifierEpoch> ClassifierCurveFromJson(const nlohmann::json& j) {
  std::vector<ClassifierEpoch> curve;
  for (const auto& e : j) {
    curve.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                     e.at("validation_accuracy").get<double>()});
  }
  return curve;
}

ClassifierModel TrainClassifier(const SplitDataset& split, std::shared_ptr<const Encoder> encoder,
                                const ClassifierConfig& config, uint64_t seed) {
  config.Validate();
  if (split.train.size() == 0 || !split.train.has_labels()) {
    throw UserError("classifier training needs labeled training rows");
  }
  torch::manual_seed(seed);
  ClassifierModel model(encoder, config);
  nn::Mlp& net = model.network();
  const std::size_t k = encoder->schema().num_classes();

  const auto x_train = nn::ToTensor(encoder->Encode(split.train.rows));
  const auto y_train = torch::tensor(std::vector<int64_t>(split.train.labels.begin(),
                                                          split.train.labels.end()));
  std::vector<double> class_weights(k, 1.0);
  if (config.class_weighting) class_weights = InverseFrequencyWeights(split.train.labels, k);
  const auto weight_tensor = torch::tensor(std::vector<float>(class_weights.begin(), class_weights.end()));

  torch::optim::Adam optimizer(
      net->parameters(),
      torch::optim::AdamOptions(config.learning_rate).betas({config.beta1, config.beta2}));

  const std::size_t n = split.train.size();
  std::vector<int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::Combine(seed, 0xc1a55));

  std::vector<ClassifierEpoch> curve;
  nn::NamedTensors best_state;
  double best_accuracy = -1.0;
  int best_epoch = -1;
  const Dataset& validation = split.validation.size() > 0 ? split.validation : split.train;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    net->train();
    rng.Shuffle(std::span<int64_t>(order));
    const auto perm = torch::tensor(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const int64_t len = static_cast<int64_t>(std::min<std::size_t>(config.batch_size, n - start));
      const auto idx = perm.narrow(0, static_cast<int64_t>(start), len);
      const auto xb = x_train.index_select(0, idx);
      const auto yb = y_train.index_select(0, idx);
      const auto loss = WeightedCrossEntropy(net->forward(xb), yb, weight_tensor);
      const double value = loss.item<double>();
      if (!std::isfinite(value)) {
        throw TrainingError("classifier loss became non-finite at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batches));
      }
      optimizer.zero_grad();
      loss.backward();
      optimizer.step();
      loss_sum += value;
      ++batches;
    }
    net->eval();
    const double accuracy = model.Accuracy(validation);
    curve.push_back({epoch, loss_sum / static_cast<double>(batches), accuracy});
    FLEXCF_LOG(kDebug) << "classifier epoch " << epoch << " loss " << curve.back().train_loss
                       << " val_acc " << accuracy;
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      best_epoch = epoch;
      best_state = nn::CaptureState(*net);
    }
  }
  nn::RestoreState(*net, best_state, "classifier");
  net->eval();
  nn::FreezeParameters(*net);
  model.set_curve(std::move(curve), best_epoch);
  FLEXCF_LOG(kInfo) << "classifier: best epoch " << best_epoch << " validation accuracy "
                    << best_accuracy;
  return model;
}

std::vector<std::size_t> PredictionHistory::IndicesOfClass(int cls) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].predicted_class == cls) out.push_back(i);
  }
  return out;
}

PredictionHistory ExportHistory(const ClassifierModel& model, std::span<const Row> rows) {
  PredictionHistory history{model.schema(), {}};
  const auto preds = model.PredictRows(rows);
  history.records.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    history.records.push_back({rows[i], preds[i].predicted_class, preds[i].probabilities});
  }
  return history;
}

void WriteHistoryCsv(const std::string& path, const PredictionHistory& history) {
  std::ofstream out(path);
  if (!out) throw UserError("cannot write history file '" + path + "'");
  const Schema& schema = history.schema;
  Dataset rows{schema, {}, {}};
  for (const auto& r : history.records) rows.rows.push_back(r.instance);
  std::istringstream body(FormatCsv(rows));
  std::string line;
  std::getline(body, line);
  out << line << ",predicted_class";
  for (const auto& cls : schema.target_classes()) out << ",prob_" << cls;
  out << "\n";
  for (const auto& record : history.records) {
    std::getline(body, line);
    out << line << "," << schema.target_classes().at(static_cast<std::size_t>(record.predicted_class));
    for (double p : record.class_probabilities) out << "," << FormatDouble(p);
    out << "\n";
  }
}

PredictionHistory LoadHistoryCsv(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open history file '" + path + "'");
  std::string header_line;
  if (!std::getline(in, header_line)) throw UserError("history file '" + path + "' is empty");
  const auto header = SplitCsvLine(header_line);
  auto find = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("history file lacks column '" + name + "'", name);
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> feature_pos;
  for (const Column& col : schema.columns()) feature_pos.push_back(find(col.name));
  const std::size_t pred_pos = find("predicted_class");
  std::vector<std::size_t> prob_pos;
  for (const auto& cls : schema.target_classes()) prob_pos.push_back(find("prob_" + cls));

  PredictionHistory history{schema, {}};
  std::string line;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = SplitCsvLine(line);
    if (cells.size() != header.size()) throw IngestError("wrong cell count in history", row_index);
    PredictionRecord record;
    for (std::size_t c = 0; c < feature_pos.size(); ++c) {
      record.instance.push_back(schema.ParseValue(c, cells[feature_pos[c]]));
    }
    record.predicted_class = schema.ClassIndex(cells[pred_pos]);
    for (std::size_t pos : prob_pos) {
      auto p = ParseDouble(cells[pos]);
      if (!p) throw IngestError("unparseable probability in history", row_index);
      record.class_probabilities.push_back(*p);
    }
    history.records.push_back(std::move(record));
    ++row_index;
  }
  return history;
}

ConfusionMatrix ComputeConfusionMatrix(const ClassifierModel& model, const Dataset& data) {
  const std::size_t k = model.schema().num_classes();
  ConfusionMatrix counts(k, std::vector<std::size_t>(k, 0));
  const auto pred = model.PredictClasses(data.rows);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++counts.at(static_cast<std::size_t>(data.labels.at(i))).at(static_cast<std::size_t>(pred[i]));
  }
  return counts;
}

}  // namespace flexcf
