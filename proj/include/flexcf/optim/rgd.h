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

#ifndef FLEXCF_OPTIM_RGD_H_
#define FLEXCF_OPTIM_RGD_H_

#include <torch/torch.h>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "flexcf/cf/template.h"
#include "flexcf/classifier/classifier.h"
#include "flexcf/gan/critic.h"
#include "flexcf/metrics/metrics.h"
#include "flexcf/nn/layout.h"
#include "json.hpp"

namespace flexcf {

struct OptimizerConfig {
  double lambda_clas = 1.0;
  double lambda_div = 1.0;
  double lambda_real = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double lr = 0.1;
  int steps = 30;
  // Reset immutable columns after every step. false = the unguided default
  // variant, whose divergence term then covers all features.
  bool template_guided = true;
  // Std of Gaussian jitter added to the mutable variables of every
  // candidate but the first of each original; 0 starts all at the original.
  double init_noise = 0.0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static OptimizerConfig FromJson(const nlohmann::json& json);
};

struct OptimizationItem {
  Row original;
  CounterfactualTemplate tmpl;
};

struct OptimizationResult {
  // One entry per item, n candidates each, predictions from the classifier.
  std::vector<InstanceCandidates> instances;
  // Per candidate (item-major): stopped early on a non-finite gradient.
  std::vector<bool> aborted;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Called after each step (1-based) with the hard-decoded current variables,
// item-major, after the projection. No clamping or raw-space reset is applied.
using StepObserver = std::function<void(int step, std::span<const Row> candidates)>;

// Variables: encoded real scalars (pre-tanh in gmm mode) plus logits of
// every simplex segment, initialised at the originals.
class RgdObjective {
 public:
  RgdObjective(const ClassifierModel& classifier, const FakenessCritic* critic,
               const nn::SegmentLayout& layout, const OptimizerConfig& config,
               torch::Tensor originals, torch::Tensor divergence_mask, torch::Tensor desired);

  // Model-space candidates from variables.
  torch::Tensor Activate(const torch::Tensor& variables) const;
  // Per-candidate loss lambda_clas*CE + lambda_div*L_div(lambda_m=1) - lambda_real*critic.
  torch::Tensor PerCandidate(const torch::Tensor& variables) const;

 private:
  const ClassifierModel& classifier_;
  const FakenessCritic* critic_;
  const nn::SegmentLayout& layout_;
  OptimizerConfig config_;
  torch::Tensor originals_;
  torch::Tensor divergence_mask_;
  torch::Tensor desired_;
};

// Variables at the encoded rows: scalars inverted through the activation,
// one-hot simplex values taken as logits (argmax preserved).
torch::Tensor InitialVariables(const nn::SegmentLayout& layout, const Encoder& encoder,
                               const torch::Tensor& encoded);

// Batched template-guided (or default) regularized gradient descent.
// `critic` may be null, which drops the realism term.
OptimizationResult OptimizeBatch(const ClassifierModel& classifier, const FakenessCritic* critic,
                                 std::span<const OptimizationItem> items, std::size_t n,
                                 const OptimizerConfig& config, uint64_t seed,
                                 const StepObserver& observer = {});

}  // namespace flexcf

#endif  // FLEXCF_OPTIM_RGD_H_
