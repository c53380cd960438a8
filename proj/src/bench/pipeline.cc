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

#include "flexcf/bench/pipeline.h"

#include "flexcf/common/error.h"
#include "flexcf/common/log.h"
#include "flexcf/common/rng.h"
#include "flexcf/data/synthetic.h"

namespace flexcf {
namespace {

constexpr uint64_t kRgdCriticSalt = 0xc417;
constexpr uint64_t kDataSalt = 0xda7a;

std::string LambdaName(double value) {
  std::string s = FormatDouble(value);
  for (char& c : s) {
    if (c == '.') c = 'p';
  }
  return s;
}

}  // namespace

nlohmann::json PipelineConfig::ToJson() const {
  return {{"data", data_path.empty() ? std::string("synthetic") : data_path},
          {"target", target},
          {"max_rows", max_rows},
          {"synthetic_rows", synthetic_rows},
          {"split_seed", split_seed},
          {"base_seed", base_seed},
          {"transform", std::string(TransformModeName(transform))},
          {"classifier", classifier.ToJson()},
          {"critic", critic.ToJson()},
          {"fcegan", fcegan.ToJson()},
          {"rgd", rgd.ToJson()},
          {"blackbox_validation", blackbox_validation},
          {"sweep", sweep.ToJson()}};
}

Dataset LoadPipelineData(const PipelineConfig& config) {
  if (config.data_path.empty()) {
    return MakeSeparableDataset(config.synthetic_rows, Rng::Combine(config.split_seed, kDataSalt));
  }
  CsvOptions options;
  options.target = config.target;
  CsvLoadResult loaded = LoadCsv(config.data_path, nullptr, options);
  if (loaded.dropped_rows > 0) {
    FLEXCF_LOG(kInfo) << "dropped " << loaded.dropped_rows << " rows with missing cells";
  }
  return Subsample(loaded.dataset, config.max_rows, config.split_seed);
}

BenchPipeline::BenchPipeline(PipelineConfig config, Dataset data) : config_(std::move(config)) {
  config_.sweep.Validate();
  split_ = Split(data, config_.split_seed);
  encoder_ = std::make_shared<const Encoder>(
      Encoder::Fit(split_.train.schema, split_.train.rows, config_.transform));
  cdf_ = EmpiricalCdf::Fit(split_.train.schema, split_.train.rows);
}

std::shared_ptr<const ClassifierModel> BenchPipeline::classifier() {
  if (!classifier_) {
    FLEXCF_LOG(kInfo) << "training classifier";
    classifier_ = std::make_shared<const ClassifierModel>(
        TrainClassifier(split_, encoder_, config_.classifier, config_.base_seed));
    FLEXCF_LOG(kInfo) << "classifier test accuracy " << classifier_->Accuracy(split_.test);
  }
  return classifier_;
}

std::shared_ptr<const FakenessCritic> BenchPipeline::evaluation_critic() {
  if (!eval_critic_) {
    FLEXCF_LOG(kInfo) << "training evaluation critic";
    eval_critic_ = std::make_shared<const FakenessCritic>(
        TrainCritic(split_.train.rows, encoder_, config_.critic, config_.base_seed));
  }
  return eval_critic_;
}

const FakenessReference& BenchPipeline::fakeness_reference() {
  if (!reference_) reference_ = ComputeFakenessReference(*evaluation_critic(), split_.test.rows);
  return *reference_;
}

int BenchPipeline::desired_class() const {
  if (config_.sweep.desired_class) return *config_.sweep.desired_class;
  return static_cast<int>(split_.train.schema.num_classes()) - 1;
}

SweepEnvironment BenchPipeline::Environment() {
  if (!instances_) {
    instances_ = SelectInstances(*classifier(), split_.test.rows, desired_class(), config_.sweep.cap);
    FLEXCF_LOG(kInfo) << "sweep instances: " << instances_->size();
  }
  SweepEnvironment env;
  env.classifier = classifier().get();
  env.cdf = &cdf_;
  env.fakeness = evaluation_critic().get();
  env.fakeness_reference = fakeness_reference();
  env.instances = *instances_;
  return env;
}

FceganConfig BenchPipeline::FceganConfigFor(const std::string& method_id) const {
  FceganConfig c = config_.fcegan;
  if (method_id == kMethodFceganClassifier) {
    c.mode = FceganMode::kClassifier;
  } else if (method_id == kMethodFceganNoTemplate) {
    c.mode = FceganMode::kClassifier;
    c.template_aware = false;
  } else if (method_id == kMethodFceganBlackBox) {
    c.mode = FceganMode::kBlackBox;
    c.lambda_clas = 0.0;
  } else {
    throw UserError("'" + method_id + "' is not an fcegan method");
  }
  return c;
}

std::shared_ptr<const FceganModel> BenchPipeline::Fcegan(const FceganConfig& config, uint64_t seed) {
  const auto key = std::make_pair(config.ToJson().dump(), seed);
  if (auto it = fcegans_.find(key); it != fcegans_.end()) return it->second;
  FLEXCF_LOG(kInfo) << "training fcegan (" << FceganModeName(config.mode)
             << (config.template_aware ? "" : ", no template") << ", lambda_m " << config.lambda_m
             << ") seed " << seed;
  std::shared_ptr<const FceganModel> model;
  if (config.mode == FceganMode::kClassifier) {
    model = std::make_shared<const FceganModel>(TrainFcegan(split_, classifier(), config, seed));
  } else {
    if (!history_) history_ = ExportHistory(*classifier(), split_.train.rows);
    // The oracle only labels generated validation candidates.
    ClassifierOracle oracle(*classifier());
    BlackBoxValidation validation{split_.validation.rows, &oracle};
    model = std::make_shared<const FceganModel>(TrainFceganBlackBox(
        *history_, encoder_, config, seed, config_.blackbox_validation ? &validation : nullptr));
  }
  fcegans_[key] = model;
  return model;
}

std::shared_ptr<const FakenessCritic> BenchPipeline::RgdCritic(uint64_t seed) {
  if (auto it = rgd_critics_.find(seed); it != rgd_critics_.end()) return it->second;
  FLEXCF_LOG(kInfo) << "training rgd critic seed " << seed;
  auto critic = std::make_shared<const FakenessCritic>(
      TrainCritic(split_.train.rows, encoder_, config_.critic, Rng::Combine(seed, kRgdCriticSalt)));
  rgd_critics_[seed] = critic;
  return critic;
}

MethodProvider BenchPipeline::FceganProvider(const std::string& variant, const FceganConfig& config) {
  return [this, variant, config](uint64_t seed) -> std::shared_ptr<const CounterfactualMethod> {
    return std::make_shared<FceganMethod>(variant, Fcegan(config, seed));
  };
}

MethodProvider BenchPipeline::RgdProvider(const std::string& id, const OptimizerConfig& config) {
  return [this, id, config](uint64_t seed) -> std::shared_ptr<const CounterfactualMethod> {
    return std::make_shared<RgdMethod>(id, classifier(), RgdCritic(seed), config);
  };
}

MethodProvider BenchPipeline::Provider(const std::string& method_id) {
  if (method_id == kMethodFceganClassifier || method_id == kMethodFceganNoTemplate ||
      method_id == kMethodFceganBlackBox) {
    return FceganProvider(method_id, FceganConfigFor(method_id));
  }
  if (method_id == kMethodRgdTemplate || method_id == kMethodRgdDefault) {
    OptimizerConfig c = config_.rgd;
    c.template_guided = method_id == kMethodRgdTemplate;
    return RgdProvider(method_id, c);
  }
  if (method_id == kMethodRandomInput) {
    auto method = std::make_shared<const RandomInputMethod>(split_.train.rows);
    return [method](uint64_t) -> std::shared_ptr<const CounterfactualMethod> { return method; };
  }
  throw UserError("unknown method '" + method_id + "'");
}

SweepResult BenchPipeline::Run(const std::string& method_id) {
  MethodProvider provider = Provider(method_id);
  return RunFlexibilitySweep(method_id, provider, Environment(), config_.sweep);
}

std::vector<SweepResult> BenchPipeline::RunDivergenceStudy(FceganMode mode) {
  const std::string base_id = mode == FceganMode::kClassifier ? kMethodFceganClassifier : kMethodFceganBlackBox;
  const SweepEnvironment env = Environment();
  std::vector<SweepResult> out;
  for (const auto& [level, config] : DivergenceStudyConfigs(FceganConfigFor(base_id))) {
    const std::string id = base_id + "_lambda_m_" + LambdaName(config.lambda_m);
    out.push_back(RunFlexibilitySweep(id, FceganProvider(id, config), env, config_.sweep));
  }
  return out;
}

}  // namespace flexcf
