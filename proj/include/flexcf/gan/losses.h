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

#ifndef FLEXCF_GAN_LOSSES_H_
#define FLEXCF_GAN_LOSSES_H_

#include <torch/torch.h>

#include <functional>

#include "flexcf/nn/layout.h"

namespace flexcf {

// Per-sample divergence, averaged over the batch:
//   (1/|x|) * sum_j w_j * d_j,  w_j = lambda_m if column j is mutable else lambda_i,
// with d_j the squared difference summed over the column's real dimensions
// plus the cross-entropy of the candidate's simplex blocks against the
// original's (hard) blocks. |x| is the number of schema columns.
// original, candidate: [B, D]; column_mask: [B, C] (1 = mutable).
torch::Tensor DivergenceLoss(const nn::SegmentLayout& layout, const torch::Tensor& original,
                             const torch::Tensor& candidate, const torch::Tensor& column_mask,
                             double lambda_m, double lambda_i = 0.0);

using CriticFn = std::function<torch::Tensor(const torch::Tensor&)>;

// WGAN-GP penalty: coefficient * mean over pac groups of (||grad||_2 - 1)^2
// at interpolates alpha * real + (1 - alpha) * fake, with one alpha per pac
// group. real and fake are [B, D] with B divisible by pac.
torch::Tensor GradientPenalty(const CriticFn& critic, const torch::Tensor& real,
                              const torch::Tensor& fake, int64_t pac, double coefficient,
                              c10::optional<at::Generator> generator = c10::nullopt);

// Wasserstein critic objective: mean critic(fake) - mean critic(real).
torch::Tensor CriticWassersteinLoss(const torch::Tensor& critic_real, const torch::Tensor& critic_fake);

struct GeneratorLossWeights {
  double lambda_og = 0.5;
  double lambda_cf = 0.5;
  double lambda_clas = 1.0;
};

struct GeneratorLossTerms {
  torch::Tensor critic_og_fake;  // critic outputs on fakes
  torch::Tensor critic_cf_fake;
  torch::Tensor divergence;      // scalar, already weighted by lambda_m / lambda_i
  torch::Tensor classifier_ce;   // scalar; undefined when no classifier is available
};

// lambda_og * (-mean D_og) + lambda_cf * (-mean D_cf) + divergence
//   + lambda_clas * classifier_ce.
// The classifier term is dropped when lambda_clas is 0 or the term is undefined.
torch::Tensor GeneratorLoss(const GeneratorLossTerms& terms, const GeneratorLossWeights& weights);

// Mean cross-entropy of logits against the desired class indices.
torch::Tensor ClassifierLoss(const torch::Tensor& logits, const torch::Tensor& desired);

}  // namespace flexcf

#endif  // FLEXCF_GAN_LOSSES_H_
