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

#include "flexcf/optim/rgd.h"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>

#include "flexcf/common/error.h"
#include "flexcf/common/log.h"
#include "flexcf/common/rng.h"
#include "flexcf/gan/losses.h"

namespace flexcf {

void OptimizerConfig::Validate() const {
  if (steps < 1) throw ConfigError("optimizer.steps must be >= 1");
  if (lambda_clas < 0 || lambda_div < 0 || lambda_real < 0) {
    throw ConfigError("optimizer weights must be non-negative");
  }
  if (!(lr > 0)) throw ConfigError("optimizer.lr must be positive");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) {
    throw ConfigError("optimizer.adam_betas must lie in [0, 1)");
  }
  if (init_noise < 0) throw ConfigError("optimizer.init_noise must be non-negative");
}

nlohmann::json OptimizerConfig::ToJson() const {
  return {{"lambda_clas", lambda_clas}, {"lambda_div", lambda_div}, {"lambda_real", lambda_real},
          {"adam_betas", {beta1, beta2}}, {"lr", lr}, {"steps", steps},
          {"template_guided", template_guided}, {"init_noise", init_noise}};
}

OptimizerConfig OptimizerConfig::FromJson(const nlohmann::json& j) {
  OptimizerConfig c;
  c.lambda_clas = j.at("lambda_clas").get<double>();
  c.lambda_div = j.at("lambda_div").get<double>();
  c.lambda_real = j.at("lambda_real").get<double>();
  c.beta1 = j.at("adam_betas").at(0).get<double>();
  c.beta2 = j.at("adam_betas").at(1).get<double>();
  c.lr = j.at("lr").get<double>();
  c.steps = j.at("steps").get<int>();
  c.template_guided = j.at("template_guided").get<bool>();
  c.init_noise = j.at("init_noise").get<double>();
  return c;
}

RgdObjective::RgdObjective(const ClassifierModel& classifier, const FakenessCritic* critic,
                           const nn::SegmentLayout& layout, const OptimizerConfig& config,
                           torch::Tensor originals, torch::Tensor divergence_mask, torch::Tensor desired)
    : classifier_(classifier),
      critic_(critic),
      layout_(layout),
      config_(config),
      originals_(std::move(originals)),
      divergence_mask_(std::move(divergence_mask)),
      desired_(std::move(desired)) {}

torch::Tensor RgdObjective::Activate(const torch::Tensor& variables) const {
  return layout_.Activate(variables, nn::SimplexActivation::kSoftmax);
}

torch::Tensor RgdObjective::PerCandidate(const torch::Tensor& variables) const {
  const auto x = Activate(variables);
  const auto opts = x.options();
  auto loss = torch::zeros({x.size(0)}, opts);
  if (config_.lambda_clas != 0.0) {
    loss = loss + config_.lambda_clas *
                      torch::nn::functional::cross_entropy(
                          classifier_.Logits(x), desired_,
                          torch::nn::functional::CrossEntropyFuncOptions().reduction(torch::kNone));
  }
  if (config_.lambda_div != 0.0) {
    const auto original = originals_.to(opts);
    const auto real = layout_.real_dims().to(opts);
    const auto simplex = layout_.simplex_dims().to(opts);
    const auto per_dim = (x - original).pow(2) * real - original * torch::log(x.clamp_min(1e-12)) * simplex;
    const auto per_column = layout_.ColumnSums(per_dim) * divergence_mask_.to(opts);
    loss = loss + config_.lambda_div * per_column.sum(1) / static_cast<double>(layout_.num_columns());
  }
  if (critic_ && config_.lambda_real != 0.0) loss = loss - config_.lambda_real * critic_->Realism(x);
  return loss;
}

torch::Tensor InitialVariables(const nn::SegmentLayout& layout, const Encoder& encoder,
                               const torch::Tensor& encoded) {
  const auto real = layout.real_dims().to(encoded.options());
  const auto simplex = layout.simplex_dims().to(encoded.options());
  auto scalars = encoded;
  if (encoder.mode() == TransformMode::kGmm) scalars = torch::atanh(encoded.clamp(-0.99, 0.99));
  return scalars * real + encoded * simplex;
}

OptimizationResult OptimizeBatch(const ClassifierModel& classifier, const FakenessCritic* critic,
                                 std::span<const OptimizationItem> items, std::size_t n,
                                 const OptimizerConfig& config, uint64_t seed,
                                 const StepObserver& observer) {
  config.Validate();
  if (items.empty() || n == 0) throw UserError("optimization batch is empty");
  const Encoder& encoder = classifier.encoder();
  const Schema& schema = encoder.schema();
  if (critic && !(critic->schema() == schema)) throw SchemaError("critic schema does not match the classifier");
  const nn::SegmentLayout layout(encoder);
  const std::size_t c = schema.num_features();
  const std::size_t k = schema.num_classes();
  const int64_t total = static_cast<int64_t>(items.size() * n);
  const int64_t d = static_cast<int64_t>(encoder.width());

  std::vector<Row> originals;
  for (const auto& item : items) {
    if (item.original.size() != c || item.tmpl.num_features() != c) {
      throw SchemaError("instance/template width does not match the classifier schema");
    }
    if (item.tmpl.desired_class < 0 || static_cast<std::size_t>(item.tmpl.desired_class) >= k) {
      throw SchemaError("desired class index out of range", "desired_class");
    }
    originals.push_back(item.original);
  }
  const Matrix encoded = encoder.Encode(originals);
  auto x_og = torch::empty({total, d});
  auto template_mask = torch::ones({total, static_cast<int64_t>(c)});
  std::vector<int64_t> desired(static_cast<std::size_t>(total));
  {
    auto xa = x_og.accessor<float, 2>();
    auto ma = template_mask.accessor<float, 2>();
    for (std::size_t r = 0; r < items.size(); ++r) {
      for (std::size_t s = 0; s < n; ++s) {
        const int64_t i = static_cast<int64_t>(r * n + s);
        for (int64_t j = 0; j < d; ++j) xa[i][j] = static_cast<float>(encoded.at(r, static_cast<std::size_t>(j)));
        for (std::size_t j = 0; j < c; ++j) ma[i][j] = items[r].tmpl.mutable_mask[j] ? 1.f : 0.f;
        desired[static_cast<std::size_t>(i)] = items[r].tmpl.desired_class;
      }
    }
  }
  const auto dim_mask = layout.ExpandColumnMask(template_mask);
  const auto div_mask = config.template_guided ? template_mask : torch::ones_like(template_mask);
  const RgdObjective objective(classifier, critic, layout, config, x_og, div_mask, torch::tensor(desired));

  const auto v0 = InitialVariables(layout, encoder, x_og);
  auto start = v0.clone();
  if (config.init_noise > 0.0 && n > 1) {
    auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
    auto jitter = torch::randn({total, d}, gen) * config.init_noise;
    auto first = torch::zeros({total, 1});
    for (std::size_t r = 0; r < items.size(); ++r) first[static_cast<int64_t>(r * n)][0] = 1.0;
    const auto move_mask = config.template_guided ? dim_mask : torch::ones_like(dim_mask);
    start = start + jitter * move_mask * (1.0 - first);
  }
  auto variables = start.clone().requires_grad_(true);
  torch::optim::Adam adam({variables}, torch::optim::AdamOptions(config.lr).betas({config.beta1, config.beta2}));

  auto active = torch::ones({total, 1});
  std::vector<bool> aborted(static_cast<std::size_t>(total), false);
  auto decode = [&](const torch::Tensor& vars, bool finalize) {
    torch::NoGradGuard no_grad;
    const auto hard = layout.Activate(vars, nn::SimplexActivation::kHard);
    std::vector<Row> rows = encoder.Decode(nn::ToMatrix(hard));
    if (!finalize) return rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        if (!schema.column(j).is_categorical()) rows[i][j] = encoder.Clamp(j, rows[i][j]);
      }
      if (config.template_guided) rows[i] = ResetImmutableRaw(rows[i], items[i / n].tmpl);
    }
    return rows;
  };

  OptimizationResult result;
  for (int step = 1; step <= config.steps; ++step) {
    const auto per = objective.PerCandidate(variables);
    const auto mask = active.squeeze(1);
    const double count = std::max(1.0, mask.sum().item<double>());
    const auto loss = (per * mask).sum() / count;
    if (step == 1) result.initial_loss = loss.item<double>();
    adam.zero_grad();
    loss.backward();
    {
      torch::NoGradGuard no_grad;
      auto grad = variables.grad();
      auto finite = torch::isfinite(grad).all(1, /*keepdim=*/true).to(torch::kFloat32);
      auto newly = (active * (1.0 - finite)).squeeze(1);
      auto bad = newly.nonzero();
      for (int64_t b = 0; b < bad.size(0); ++b) {
        const int64_t i = bad[b][0].item<int64_t>();
        aborted[static_cast<std::size_t>(i)] = true;
        FLEXCF_LOG(kWarning) << "optimizer: candidate " << i << " aborted at step " << step
                             << " (non-finite gradient)";
      }
      active = active * finite;
      grad.copy_(torch::where(active.expand_as(grad) > 0, grad, torch::zeros_like(grad)));
    }
    const auto before = variables.detach().clone();
    adam.step();
    {
      torch::NoGradGuard no_grad;
      auto next = torch::where(active.expand_as(variables) > 0, variables, before);
      if (config.template_guided) next = dim_mask * next + (1.0 - dim_mask) * v0;
      variables.copy_(next);
    }
    if (observer) {
      const std::vector<Row> rows = decode(variables.detach(), false);
      observer(step, rows);
    }
  }
  {
    torch::NoGradGuard no_grad;
    const auto mask = active.squeeze(1);
    const double count = std::max(1.0, mask.sum().item<double>());
    result.final_loss = ((objective.PerCandidate(variables) * mask).sum() / count).item<double>();
  }

  const std::vector<Row> rows = decode(variables.detach(), true);
  result.instances.resize(items.size());
  for (std::size_t r = 0; r < items.size(); ++r) {
    auto& inst = result.instances[r];
    inst.original = items[r].original;
    inst.tmpl = items[r].tmpl;
    inst.candidates.assign(rows.begin() + static_cast<std::ptrdiff_t>(r * n),
                           rows.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
    inst.predictions = classifier.PredictRows(inst.candidates);
  }
  result.aborted = std::move(aborted);
  return result;
}

}  // namespace flexcf
