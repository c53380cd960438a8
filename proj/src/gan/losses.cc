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

#include "flexcf/gan/losses.h"

namespace flexcf {

torch::Tensor DivergenceLoss(const nn::SegmentLayout& layout, const torch::Tensor& original,
                             const torch::Tensor& candidate, const torch::Tensor& column_mask,
                             double lambda_m, double lambda_i) {
  const auto opts = candidate.options();
  const auto real = layout.real_dims().to(opts);
  const auto simplex = layout.simplex_dims().to(opts);
  const auto squared = (candidate - original).pow(2) * real;
  const auto cross_entropy = -original * torch::log(candidate.clamp_min(1e-12)) * simplex;
  const auto per_column = layout.ColumnSums(squared + cross_entropy);
  const auto mask = column_mask.to(opts);
  auto weights = mask * lambda_m;
  if (lambda_i != 0.0) weights = weights + (1.0 - mask) * lambda_i;
  const double num_columns = static_cast<double>(layout.num_columns());
  return ((per_column * weights).sum(1) / num_columns).mean();
}

torch::Tensor GradientPenalty(const CriticFn& critic, const torch::Tensor& real,
                              const torch::Tensor& fake, int64_t pac, double coefficient,
                              c10::optional<at::Generator> generator) {
  TORCH_CHECK(real.sizes() == fake.sizes(), "real and fake shapes differ");
  const int64_t batch = real.size(0);
  const int64_t dims = real.size(1);
  TORCH_CHECK(batch % pac == 0, "batch ", batch, " not divisible by pac ", pac);
  const int64_t groups = batch / pac;
  auto alpha = torch::rand({groups, 1, 1}, generator, real.options())
                   .expand({groups, pac, dims})
                   .reshape({batch, dims});
  auto interpolates = (alpha * real.detach() + (1.0 - alpha) * fake.detach()).requires_grad_(true);
  auto out = critic(interpolates);
  auto grads = torch::autograd::grad({out.sum()}, {interpolates}, {}, /*retain_graph=*/true,
                                     /*create_graph=*/true, /*allow_unused=*/true);
  torch::Tensor g = grads[0].defined() ? grads[0] : torch::zeros_like(interpolates);
  auto norms = g.reshape({groups, pac * dims}).norm(2, 1);
  return (norms - 1.0).pow(2).mean() * coefficient;
}

torch::Tensor CriticWassersteinLoss(const torch::Tensor& critic_real, const torch::Tensor& critic_fake) {
  return critic_fake.mean() - critic_real.mean();
}

torch::Tensor GeneratorLoss(const GeneratorLossTerms& terms, const GeneratorLossWeights& weights) {
  auto loss = -weights.lambda_og * terms.critic_og_fake.mean() -
              weights.lambda_cf * terms.critic_cf_fake.mean();
  if (terms.divergence.defined()) loss = loss + terms.divergence;
  if (weights.lambda_clas != 0.0 && terms.classifier_ce.defined()) {
    loss = loss + weights.lambda_clas * terms.classifier_ce;
  }
  return loss;
}

torch::Tensor ClassifierLoss(const torch::Tensor& logits, const torch::Tensor& desired) {
  return torch::nn::functional::cross_entropy(logits, desired);
}

}  // namespace flexcf
