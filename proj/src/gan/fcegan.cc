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

#include "flexcf/gan/fcegan.h"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flexcf/common/error.h"
#include "flexcf/common/log.h"
#include "flexcf/gan/losses.h"

namespace flexcf {

std::string_view FceganModeName(FceganMode mode) {
  return mode == FceganMode::kClassifier ? "classifier" : "black-box";
}

FceganMode ParseFceganMode(std::string_view name) {
  if (name == "classifier") return FceganMode::kClassifier;
  if (name == "black-box" || name == "black_box" || name == "blackbox") return FceganMode::kBlackBox;
  throw ConfigError("unknown fcegan mode '" + std::string(name) + "' (expected classifier|black-box)");
}

FceganConfig FceganConfig::ForMode(FceganMode mode) {
  FceganConfig c;
  c.mode = mode;
  if (mode == FceganMode::kBlackBox) c.lambda_clas = 0.0;
  return c;
}

void FceganConfig::Validate() const {
  auto positive_dims = [](const std::vector<int64_t>& dims, const char* what) {
    if (dims.empty()) throw ConfigError(std::string(what) + " must not be empty");
    for (int64_t d : dims) {
      if (d <= 0) throw ConfigError(std::string(what) + " must be positive");
    }
  };
  positive_dims(gen_hidden, "fcegan.gen_hidden");
  positive_dims(disc_hidden, "fcegan.disc_hidden");
  if (pac <= 0 || disc_steps <= 0 || batch_size <= 0 || max_epochs <= 0 || patience <= 0 ||
      noise_dim < 0 || validation_cap == 0) {
    throw ConfigError("fcegan integer settings must be positive");
  }
  if (batch_size % pac != 0) throw ConfigError("fcegan.batch_size must be a multiple of fcegan.pac");
  if (!(lr_gen > 0 && lr_disc > 0 && tau > 0 && gp_coefficient >= 0 && weight_decay >= 0)) {
    throw ConfigError("fcegan rates, temperature and penalty must be positive");
  }
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) {
    throw ConfigError("fcegan.adam_betas must lie in [0, 1)");
  }
  if (lambda_clas < 0 || lambda_og < 0 || lambda_cf < 0 || lambda_m < 0 || lambda_i < 0) {
    throw ConfigError("fcegan loss weights must be non-negative");
  }
  if (dropout < 0 || dropout >= 1) throw ConfigError("fcegan.dropout must lie in [0, 1)");
  if (mode == FceganMode::kBlackBox && lambda_clas != 0.0) {
    throw ConfigError("black-box mode requires fcegan.lambda_clas = 0");
  }
}

nlohmann::json FceganConfig::ToJson() const {
  return {{"gen_hidden", gen_hidden},
          {"disc_hidden", disc_hidden},
          {"pac", pac},
          {"disc_steps", disc_steps},
          {"lr_gen", lr_gen},
          {"lr_disc", lr_disc},
          {"weight_decay", weight_decay},
          {"adam_betas", {beta1, beta2}},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"gp_coefficient", gp_coefficient},
          {"noise_dim", noise_dim},
          {"lambda_clas", lambda_clas},
          {"lambda_og", lambda_og},
          {"lambda_cf", lambda_cf},
          {"lambda_m", lambda_m},
          {"lambda_i", lambda_i},
          {"tau", tau},
          {"dropout", dropout},
          {"mode", FceganModeName(mode)},
          {"template_aware", template_aware},
          {"validation_cap", validation_cap}};
}

FceganConfig FceganConfig::FromJson(const nlohmann::json& j) {
  FceganConfig c;
  c.gen_hidden = j.at("gen_hidden").get<std::vector<int64_t>>();
  c.disc_hidden = j.at("disc_hidden").get<std::vector<int64_t>>();
  c.pac = j.at("pac").get<int64_t>();
  c.disc_steps = j.at("disc_steps").get<int>();
  c.lr_gen = j.at("lr_gen").get<double>();
  c.lr_disc = j.at("lr_disc").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.beta1 = j.at("adam_betas").at(0).get<double>();
  c.beta2 = j.at("adam_betas").at(1).get<double>();
  c.batch_size = j.at("batch_size").get<int64_t>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.gp_coefficient = j.at("gp_coefficient").get<double>();
  c.noise_dim = j.at("noise_dim").get<int64_t>();
  c.lambda_clas = j.at("lambda_clas").get<double>();
  c.lambda_og = j.at("lambda_og").get<double>();
  c.lambda_cf = j.at("lambda_cf").get<double>();
  c.lambda_m = j.at("lambda_m").get<double>();
  c.lambda_i = j.at("lambda_i").get<double>();
  c.tau = j.at("tau").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.mode = ParseFceganMode(j.at("mode").get<std::string>());
  c.template_aware = j.at("template_aware").get<bool>();
  c.validation_cap = j.at("validation_cap").get<std::size_t>();
  return c;
}

namespace {

nlohmann::json OptionalJson(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> OptionalDouble(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

nlohmann::json FceganCurveToJson(const std::vector<FceganEpoch>& curve) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : curve) {
    out.push_back({{"epoch", e.epoch},
                   {"critic_og_loss", e.critic_og_loss},
                   {"critic_cf_loss", e.critic_cf_loss},
                   {"gradient_penalty", e.gradient_penalty},
                   {"generator_loss", e.generator_loss},
                   {"divergence_loss", e.divergence_loss},
                   {"valid_full", OptionalJson(e.valid_full)},
                   {"valid_quarter", OptionalJson(e.valid_quarter)},
                   {"score", OptionalJson(e.score)}});
  }
  return out;
}

std::vector<FceganEpoch> FceganCurveFromJson(const nlohmann::json& j) {
  std::vector<FceganEpoch> curve;
  for (const auto& e : j) {
    FceganEpoch epoch;
    epoch.epoch = e.at("epoch").get<int>();
    epoch.critic_og_loss = e.at("critic_og_loss").get<double>();
    epoch.critic_cf_loss = e.at("critic_cf_loss").get<double>();
    epoch.gradient_penalty = e.at("gradient_penalty").get<double>();
    epoch.generator_loss = e.at("generator_loss").get<double>();
    epoch.divergence_loss = e.at("divergence_loss").get<double>();
    epoch.valid_full = OptionalDouble(e, "valid_full");
    epoch.valid_quarter = OptionalDouble(e, "valid_quarter");
    epoch.score = OptionalDouble(e, "score");
    curve.push_back(epoch);
  }
  return curve;
}

FceganModel::FceganModel(std::shared_ptr<const Encoder> encoder, FceganConfig config,
                         std::shared_ptr<const ClassifierModel> classifier)
    : encoder_(std::move(encoder)),
      config_(std::move(config)),
      classifier_(std::move(classifier)),
      layout_(*encoder_) {
  config_.Validate();
  const int64_t d = static_cast<int64_t>(encoder_->width());
  const int64_t k = static_cast<int64_t>(encoder_->schema().num_classes());
  generator_ = nn::ResidualGenerator(input_width(), config_.gen_hidden, d);
  critic_og_ = nn::PacCritic(d, config_.disc_hidden, config_.pac, config_.dropout);
  critic_cf_ = nn::PacCritic(d + k, config_.disc_hidden, config_.pac, config_.dropout);
  generator_->eval();
  critic_og_->eval();
  critic_cf_->eval();
  if (classifier_ && !(classifier_->schema() == encoder_->schema())) {
    throw SchemaError("classifier schema does not match the generator schema");
  }
}

void FceganModel::set_classifier(std::shared_ptr<const ClassifierModel> classifier) {
  if (classifier && !(classifier->schema() == encoder_->schema())) {
    throw SchemaError("classifier schema does not match the generator schema");
  }
  classifier_ = std::move(classifier);
}

int64_t FceganModel::input_width() const {
  const int64_t d = static_cast<int64_t>(encoder_->width());
  const int64_t c = static_cast<int64_t>(encoder_->schema().num_features());
  const int64_t k = static_cast<int64_t>(encoder_->schema().num_classes());
  return 2 * d + 2 * k + c + config_.noise_dim;
}

void FceganModel::set_curve(std::vector<FceganEpoch> curve, int best_epoch) {
  curve_ = std::move(curve);
  best_epoch_ = best_epoch;
}

torch::Tensor FceganModel::GeneratorInput(const torch::Tensor& original, const torch::Tensor& predicted,
                                          const torch::Tensor& column_mask, const torch::Tensor& desired,
                                          const torch::Tensor& noise) const {
  const auto masked = original * (1.0 - layout_.ExpandColumnMask(column_mask));
  return torch::cat({original, predicted, masked, column_mask, desired, noise}, 1);
}

std::vector<InstanceCandidates> FceganModel::Generate(std::span<const GenerationRequest> requests,
                                                      std::size_t n, uint64_t seed,
                                                      const LabelOracle* validator) const {
  const Schema& schema = encoder_->schema();
  const std::size_t k = schema.num_classes();
  const std::size_t c = schema.num_features();
  const std::size_t total = requests.size() * n;
  std::vector<InstanceCandidates> out(requests.size());
  for (std::size_t r = 0; r < requests.size(); ++r) {
    const auto& req = requests[r];
    if (req.instance.size() != c || req.tmpl.num_features() != c) {
      throw SchemaError("instance/template width does not match the model schema");
    }
    out[r].original = req.instance;
    out[r].tmpl = req.tmpl;
  }
  if (total == 0) return out;

  std::vector<Row> instances;
  for (const auto& req : requests) instances.push_back(req.instance);
  const Matrix encoded = encoder_->Encode(instances);
  std::vector<std::optional<int>> predicted(requests.size());
  std::vector<CandidatePrediction> live;
  if (classifier_) live = classifier_->Predict(encoded);
  for (std::size_t r = 0; r < requests.size(); ++r) {
    if (requests[r].predicted_class) {
      predicted[r] = requests[r].predicted_class;
    } else if (classifier_) {
      predicted[r] = live[r].predicted_class;
    }
  }

  const int64_t d = static_cast<int64_t>(encoder_->width());
  auto x_og = torch::empty({static_cast<int64_t>(total), d});
  auto pred = torch::zeros({static_cast<int64_t>(total), static_cast<int64_t>(k)});
  auto input_mask = torch::ones({static_cast<int64_t>(total), static_cast<int64_t>(c)});
  auto reset_mask = torch::ones({static_cast<int64_t>(total), static_cast<int64_t>(c)});
  auto desired = torch::zeros({static_cast<int64_t>(total), static_cast<int64_t>(k)});
  {
    auto xa = x_og.accessor<float, 2>();
    auto pa = pred.accessor<float, 2>();
    auto ia = input_mask.accessor<float, 2>();
    auto ra = reset_mask.accessor<float, 2>();
    auto da = desired.accessor<float, 2>();
    for (std::size_t r = 0; r < requests.size(); ++r) {
      const auto& tmpl = requests[r].tmpl;
      if (tmpl.desired_class < 0 || static_cast<std::size_t>(tmpl.desired_class) >= k) {
        throw SchemaError("desired class index out of range", "desired_class");
      }
      for (std::size_t s = 0; s < n; ++s) {
        const int64_t i = static_cast<int64_t>(r * n + s);
        for (int64_t j = 0; j < d; ++j) xa[i][j] = static_cast<float>(encoded.at(r, static_cast<std::size_t>(j)));
        if (predicted[r]) {
          pa[i][*predicted[r]] = 1.f;
        } else {
          for (std::size_t cls = 0; cls < k; ++cls) {
            if (static_cast<int>(cls) != tmpl.desired_class) pa[i][cls] = 1.f / static_cast<float>(k - 1);
          }
        }
        for (std::size_t j = 0; j < c; ++j) {
          const float m = tmpl.mutable_mask[j] ? 1.f : 0.f;
          ra[i][j] = m;
          if (config_.template_aware) ia[i][j] = m;
        }
        da[i][tmpl.desired_class] = 1.f;
      }
    }
  }

  torch::Tensor result;
  {
    torch::NoGradGuard no_grad;
    auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
    auto noise = torch::randn({static_cast<int64_t>(total), config_.noise_dim}, gen);
    auto raw = generator_->forward(GeneratorInput(x_og, pred, input_mask, desired, noise));
    auto hard = layout_.Activate(raw, nn::SimplexActivation::kHard);
    auto dim_mask = layout_.ExpandColumnMask(reset_mask);
    result = dim_mask * hard + (1.0 - dim_mask) * x_og;
  }

  std::vector<Row> decoded = encoder_->Decode(nn::ToMatrix(result));
  for (std::size_t r = 0; r < requests.size(); ++r) {
    for (std::size_t s = 0; s < n; ++s) {
      Row row = std::move(decoded[r * n + s]);
      for (std::size_t j = 0; j < c; ++j) {
        if (!schema.column(j).is_categorical()) row[j] = encoder_->Clamp(j, row[j]);
      }
      out[r].candidates.push_back(ResetImmutableRaw(row, requests[r].tmpl));
    }
  }

  if (classifier_) {
    for (auto& inst : out) inst.predictions = classifier_->PredictRows(inst.candidates);
  } else if (validator) {
    for (auto& inst : out) {
      for (int cls : validator->PredictClasses(inst.candidates)) {
        inst.predictions.push_back({cls, {}});
      }
    }
  }
  return out;
}

InstanceCandidates FceganModel::GenerateOne(const Row& instance, const CounterfactualTemplate& tmpl,
                                            std::size_t n, uint64_t seed) const {
  GenerationRequest req{instance, tmpl, std::nullopt};
  return std::move(Generate(std::span<const GenerationRequest>(&req, 1), n, seed).front());
}

std::vector<std::vector<std::size_t>> BuildClassPools(std::span<const int> predicted,
                                                      std::size_t num_classes) {
  std::vector<std::vector<std::size_t>> pools(num_classes);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    pools.at(static_cast<std::size_t>(predicted[i])).push_back(i);
  }
  return pools;
}

PoolSampler::PoolSampler(const Schema& schema, std::span<const Row> rows,
                         std::vector<std::vector<std::size_t>> pools)
    : pools_(std::move(pools)) {
  tables_.resize(pools_.size());
  for (std::size_t cls = 0; cls < pools_.size(); ++cls) {
    for (std::size_t j = 0; j < schema.num_features(); ++j) {
      const Column& col = schema.column(j);
      if (!col.is_categorical()) continue;
      CategoryTable table;
      table.rows.resize(col.categories.size());
      for (std::size_t i : pools_[cls]) {
        table.rows.at(static_cast<std::size_t>(rows[i][j])).push_back(i);
      }
      double acc = 0.0;
      for (const auto& members : table.rows) {
        acc += std::log1p(static_cast<double>(members.size()));
        table.cumulative.push_back(acc);
      }
      tables_[cls].push_back(std::move(table));
    }
  }
}

std::size_t PoolSampler::Sample(int cls, Rng& rng) const {
  const auto& pool = pools_.at(static_cast<std::size_t>(cls));
  if (pool.empty()) throw UserError("empty real pool for class " + std::to_string(cls));
  const auto& tables = tables_[static_cast<std::size_t>(cls)];
  if (tables.empty()) return pool[rng.UniformInt(pool.size())];
  const CategoryTable& table = tables[rng.UniformInt(tables.size())];
  const double u = rng.Uniform() * table.cumulative.back();
  auto it = std::upper_bound(table.cumulative.begin(), table.cumulative.end(), u);
  std::size_t cat = static_cast<std::size_t>(it - table.cumulative.begin());
  while (cat >= table.rows.size() || table.rows[cat].empty()) cat = (cat + 1) % table.rows.size();
  const auto& members = table.rows[cat];
  return members[rng.UniformInt(members.size())];
}

namespace {

struct CoreInputs {
  std::vector<Row> rows;
  std::vector<int> predicted;
  std::vector<Row> validation_rows;
  const LabelOracle* validation_oracle = nullptr;
};

struct ValidationSet {
  std::vector<GenerationRequest> full;
  std::vector<GenerationRequest> quarter;
};

ValidationSet BuildValidationSet(const Schema& schema, const CoreInputs& in, std::size_t cap,
                                 uint64_t seed) {
  ValidationSet set;
  if (!in.validation_oracle || in.validation_rows.empty()) return set;
  std::vector<Row> rows = in.validation_rows;
  if (rows.size() > cap) {
    Rng pick(Rng::Combine(seed, 0x5e1ec7));
    pick.Shuffle(std::span<Row>(rows));
    rows.resize(cap);
  }
  const std::vector<int> predicted = in.validation_oracle->PredictClasses(rows);
  Rng rng(Rng::Combine(seed, 0x7a11d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int desired = SampleDesiredClass(schema.num_classes(), predicted[i], rng);
    set.full.push_back({rows[i], SampleTemplateWithFraction(schema, rows[i], 1.0, desired, rng), predicted[i]});
    set.quarter.push_back({rows[i], SampleTemplateWithFraction(schema, rows[i], 0.25, desired, rng), predicted[i]});
  }
  return set;
}

double ValidFraction(const FceganModel& model, const std::vector<GenerationRequest>& requests,
                     const LabelOracle& oracle, uint64_t seed) {
  // Labels come from the oracle only, never from a linked classifier.
  std::vector<Row> candidates;
  std::vector<int> desired;
  for (auto& inst : model.Generate(requests, 1, seed)) {
    candidates.push_back(inst.candidates.front());
    desired.push_back(inst.tmpl.desired_class);
  }
  const std::vector<int> labels = oracle.PredictClasses(candidates);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += labels[i] == desired[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

void CheckFinite(double value, const char* what, int epoch, std::size_t step) {
  if (!std::isfinite(value)) {
    throw TrainingError(std::string(what) + " became non-finite at epoch " + std::to_string(epoch) +
                        ", step " + std::to_string(step));
  }
}

constexpr double kPenaltyCollapse = 1e6;

FceganModel TrainCore(std::shared_ptr<const Encoder> encoder, FceganConfig config,
                      std::shared_ptr<const ClassifierModel> classifier, std::shared_ptr<const ClassifierModel> loss_classifier,
                      const CoreInputs& in, uint64_t seed) {
  config.Validate();
  const Schema& schema = encoder->schema();
  const std::size_t k = schema.num_classes();
  const std::size_t c = schema.num_features();
  const std::size_t n = in.rows.size();
  if (n < static_cast<std::size_t>(config.pac)) {
    throw UserError("fcegan training needs at least pac (" + std::to_string(config.pac) + ") rows");
  }

  torch::manual_seed(seed);
  FceganModel model(encoder, config, classifier);
  auto& G = model.generator();
  auto& D_og = model.critic_og();
  auto& D_cf = model.critic_cf();
  const nn::SegmentLayout& layout = model.layout();

  Rng rng(Rng::Combine(seed, 0xfce6a));
  Rng encode_rng(Rng::Combine(seed, 0xe2c0de));
  const auto x_all = nn::ToTensor(
      encoder->Encode(in.rows, encoder->mode() == TransformMode::kGmm ? &encode_rng : nullptr));

  PoolSampler sampler(schema, in.rows, BuildClassPools(in.predicted, k));
  std::vector<std::vector<int>> allowed(k);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t q = 0; q < k; ++q) {
      if (q != p && !sampler.empty(static_cast<int>(q))) allowed[p].push_back(static_cast<int>(q));
    }
  }
  std::vector<int64_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (!allowed[static_cast<std::size_t>(in.predicted[i])].empty()) order.push_back(static_cast<int64_t>(i));
  }
  for (std::size_t cls = 0; cls < k; ++cls) {
    if (sampler.empty(static_cast<int>(cls))) {
      FLEXCF_LOG(kWarning) << "no real rows predicted as class '" << schema.target_classes()[cls]
                           << "'; it is skipped as a desired class";
    }
  }
  const int64_t usable = static_cast<int64_t>(order.size());
  const int64_t batch = std::min<int64_t>(config.batch_size, (usable / config.pac) * config.pac);
  if (batch < config.pac) throw UserError("too few rows with a reachable desired class to train");
  const int64_t steps = std::max<int64_t>(1, usable / batch);

  torch::optim::Adam opt_g(G->parameters(), torch::optim::AdamOptions(config.lr_gen)
                                                 .betas({config.beta1, config.beta2})
                                                 .weight_decay(config.weight_decay));
  torch::optim::Adam opt_og(D_og->parameters(), torch::optim::AdamOptions(config.lr_disc)
                                                     .betas({config.beta1, config.beta2})
                                                     .weight_decay(config.weight_decay));
  torch::optim::Adam opt_cf(D_cf->parameters(), torch::optim::AdamOptions(config.lr_disc)
                                                     .betas({config.beta1, config.beta2})
                                                     .weight_decay(config.weight_decay));

  const ValidationSet validation = BuildValidationSet(schema, in, config.validation_cap, seed);
  const uint64_t validation_seed = Rng::Combine(seed, 0x6e4e);
  const bool use_classifier_loss = loss_classifier && config.lambda_clas > 0.0;
  const GeneratorLossWeights weights{config.lambda_og, config.lambda_cf, config.lambda_clas};
  auto critic_og_fn = [&](const torch::Tensor& x) { return D_og->forward(x); };
  auto critic_cf_fn = [&](const torch::Tensor& x) { return D_cf->forward(x); };

  std::vector<FceganEpoch> curve;
  nn::NamedTensors best_g, best_og, best_cf;
  double best_score = -1.0;
  int best_epoch = -1;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    G->train();
    D_og->train();
    D_cf->train();
    rng.Shuffle(std::span<int64_t>(order));
    FceganEpoch stats;
    stats.epoch = epoch;
    for (int64_t step = 0; step < steps; ++step) {
      std::vector<int64_t> idx(order.begin() + step * batch, order.begin() + (step + 1) * batch);
      auto col_mask = torch::zeros({batch, static_cast<int64_t>(c)});
      auto pred_oh = torch::zeros({batch, static_cast<int64_t>(k)});
      auto desired_oh = torch::zeros({batch, static_cast<int64_t>(k)});
      std::vector<int64_t> desired_idx(static_cast<std::size_t>(batch));
      std::vector<int64_t> real_idx(static_cast<std::size_t>(batch));
      {
        auto ma = col_mask.accessor<float, 2>();
        auto pa = pred_oh.accessor<float, 2>();
        auto da = desired_oh.accessor<float, 2>();
        for (int64_t b = 0; b < batch; ++b) {
          const std::size_t i = static_cast<std::size_t>(idx[b]);
          const int p = in.predicted[i];
          int desired;
          if (config.template_aware) {
            const CounterfactualTemplate t = SampleTrainingTemplate(schema, in.rows[i], p, rng);
            for (std::size_t j = 0; j < c; ++j) ma[b][j] = t.mutable_mask[j] ? 1.f : 0.f;
            desired = t.desired_class;
          } else {
            for (std::size_t j = 0; j < c; ++j) ma[b][j] = 1.f;
            desired = SampleDesiredClass(k, p, rng);
          }
          if (sampler.empty(desired)) {
            const auto& options = allowed[static_cast<std::size_t>(p)];
            desired = options[rng.UniformInt(options.size())];
          }
          pa[b][p] = 1.f;
          da[b][desired] = 1.f;
          desired_idx[static_cast<std::size_t>(b)] = desired;
          real_idx[static_cast<std::size_t>(b)] = static_cast<int64_t>(sampler.Sample(desired, rng));
        }
      }
      const auto x_og = x_all.index_select(0, torch::tensor(idx));
      const auto real_cf = torch::cat({x_all.index_select(0, torch::tensor(real_idx)), desired_oh}, 1);
      const auto dim_mask = layout.ExpandColumnMask(col_mask);
      const auto desired_t = torch::tensor(desired_idx);

      auto produce = [&](torch::Tensor* soft) {
        auto noise = torch::randn({batch, config.noise_dim});
        auto act = layout.Activate(G->forward(model.GeneratorInput(x_og, pred_oh, col_mask, desired_oh, noise)),
                                   nn::SimplexActivation::kGumbel, config.tau);
        if (soft) *soft = act;
        return config.template_aware ? dim_mask * act + (1.0 - dim_mask) * x_og : act;
      };

      for (int ds = 0; ds < config.disc_steps; ++ds) {
        const auto fake = produce(nullptr).detach();
        const auto fake_cf = torch::cat({fake, desired_oh}, 1);
        const auto gp_og = GradientPenalty(critic_og_fn, x_og, fake, config.pac, config.gp_coefficient);
        const auto loss_og = CriticWassersteinLoss(D_og->forward(x_og), D_og->forward(fake)) + gp_og;
        opt_og.zero_grad();
        loss_og.backward();
        opt_og.step();
        const auto gp_cf = GradientPenalty(critic_cf_fn, real_cf, fake_cf, config.pac, config.gp_coefficient);
        const auto loss_cf = CriticWassersteinLoss(D_cf->forward(real_cf), D_cf->forward(fake_cf)) + gp_cf;
        opt_cf.zero_grad();
        loss_cf.backward();
        opt_cf.step();
        const double og = loss_og.item<double>(), cf = loss_cf.item<double>();
        const double gp = gp_og.item<double>() + gp_cf.item<double>();
        CheckFinite(og, "critic_og loss", epoch, static_cast<std::size_t>(step));
        CheckFinite(cf, "critic_cf loss", epoch, static_cast<std::size_t>(step));
        if (gp > kPenaltyCollapse) {
          throw TrainingError("critic collapse: gradient penalty " + std::to_string(gp) + " at epoch " +
                              std::to_string(epoch) + ", step " + std::to_string(step));
        }
        stats.critic_og_loss += og;
        stats.critic_cf_loss += cf;
        stats.gradient_penalty += gp;
      }

      torch::Tensor soft;
      const auto fake = produce(&soft);
      GeneratorLossTerms terms;
      terms.critic_og_fake = D_og->forward(fake);
      terms.critic_cf_fake = D_cf->forward(torch::cat({fake, desired_oh}, 1));
      if (config.lambda_m != 0.0 || config.lambda_i != 0.0) {
        terms.divergence = DivergenceLoss(layout, x_og, soft, col_mask, config.lambda_m, config.lambda_i);
      }
      if (use_classifier_loss) terms.classifier_ce = ClassifierLoss(loss_classifier->Logits(fake), desired_t);
      const auto loss_g = GeneratorLoss(terms, weights);
      opt_g.zero_grad();
      loss_g.backward();
      opt_g.step();
      const double g = loss_g.item<double>();
      CheckFinite(g, "generator loss", epoch, static_cast<std::size_t>(step));
      stats.generator_loss += g;
      if (terms.divergence.defined()) stats.divergence_loss += terms.divergence.item<double>();
    }
    const double denom = static_cast<double>(steps);
    stats.critic_og_loss /= denom * config.disc_steps;
    stats.critic_cf_loss /= denom * config.disc_steps;
    stats.gradient_penalty /= denom * config.disc_steps;
    stats.generator_loss /= denom;
    stats.divergence_loss /= denom;

    G->eval();
    D_og->eval();
    D_cf->eval();
    if (!validation.full.empty()) {
      stats.valid_full = ValidFraction(model, validation.full, *in.validation_oracle, validation_seed);
      stats.valid_quarter = ValidFraction(model, validation.quarter, *in.validation_oracle, validation_seed);
      stats.score = 0.5 * (*stats.valid_full + *stats.valid_quarter);
    }
    FLEXCF_LOG(kDebug) << "fcegan epoch " << epoch << " D_og " << stats.critic_og_loss << " D_cf "
                       << stats.critic_cf_loss << " G " << stats.generator_loss << " score "
                       << (stats.score ? *stats.score : -1.0);
    curve.push_back(stats);
    const double score = stats.score.value_or(static_cast<double>(epoch));
    if (score > best_score) {
      best_score = score;
      best_epoch = epoch;
      best_g = nn::CaptureState(*G);
      best_og = nn::CaptureState(*D_og);
      best_cf = nn::CaptureState(*D_cf);
    }
    if (stats.score && epoch - best_epoch >= config.patience) break;
  }
  nn::RestoreState(*G, best_g, "generator");
  nn::RestoreState(*D_og, best_og, "critic_og");
  nn::RestoreState(*D_cf, best_cf, "critic_cf");
  G->eval();
  D_og->eval();
  D_cf->eval();
  model.set_curve(std::move(curve), best_epoch);
  FLEXCF_LOG(kInfo) << "fcegan (" << FceganModeName(config.mode) << "): kept epoch " << best_epoch;
  return model;
}

}  // namespace

FceganModel TrainFcegan(const SplitDataset& split, std::shared_ptr<const ClassifierModel> classifier,
                        const FceganConfig& config, uint64_t seed) {
  if (!classifier) throw UserError("classifier-mode training needs a classifier");
  if (config.mode != FceganMode::kClassifier) {
    throw ConfigError("TrainFcegan expects classifier mode; use black-box training with a history");
  }
  ClassifierOracle oracle(*classifier);
  CoreInputs in;
  in.rows = split.train.rows;
  in.predicted = classifier->PredictClasses(in.rows);
  in.validation_rows = split.validation.rows;
  in.validation_oracle = &oracle;
  return TrainCore(classifier->shared_encoder(), config, classifier, classifier, in, seed);
}

FceganModel TrainFceganBlackBox(const PredictionHistory& history, std::shared_ptr<const Encoder> encoder,
                                const FceganConfig& config, uint64_t seed,
                                const BlackBoxValidation* validation) {
  if (config.mode != FceganMode::kBlackBox) throw ConfigError("black-box training expects black-box mode");
  if (!(history.schema == encoder->schema())) throw SchemaError("history schema does not match the encoder");
  if (history.records.empty()) throw UserError("prediction history is empty");
  CoreInputs in;
  for (const auto& record : history.records) {
    in.rows.push_back(record.instance);
    in.predicted.push_back(record.predicted_class);
  }
  if (validation) {
    in.validation_rows = validation->rows;
    in.validation_oracle = validation->oracle;
  }
  return TrainCore(std::move(encoder), config, nullptr, nullptr, in, seed);
}

}  // namespace flexcf
