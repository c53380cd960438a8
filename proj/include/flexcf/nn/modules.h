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

#ifndef FLEXCF_NN_MODULES_H_
#define FLEXCF_NN_MODULES_H_

#include <torch/torch.h>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace flexcf::nn {

// Linear -> BatchNorm -> ReLU, concatenated with the block input.
struct ResidualImpl : torch::nn::Module {
  ResidualImpl(int64_t in_features, int64_t out_features);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Linear fc{nullptr};
  torch::nn::BatchNorm1d bn{nullptr};
};
TORCH_MODULE(Residual);

// Stack of residual-concatenation layers followed by a linear head. Each
// residual layer widens the representation by its hidden size.
struct ResidualGeneratorImpl : torch::nn::Module {
  ResidualGeneratorImpl(int64_t in_features, const std::vector<int64_t>& hidden,
                        int64_t out_features);
  torch::Tensor forward(torch::Tensor x);

  torch::nn::ModuleList layers;
  torch::nn::Linear head{nullptr};
};
TORCH_MODULE(ResidualGenerator);

// WGAN critic over packs of `pac` consecutive rows:
// [Linear -> LeakyReLU(0.2) -> Dropout] per hidden layer, then Linear -> 1.
struct PacCriticImpl : torch::nn::Module {
  PacCriticImpl(int64_t in_features, const std::vector<int64_t>& hidden, int64_t pac,
                double dropout = 0.5);
  // x: [B, in_features] with B divisible by pac; returns [B / pac, 1].
  torch::Tensor forward(const torch::Tensor& x);

  int64_t in_features;
  int64_t pac;
  double dropout;
  torch::nn::ModuleList layers;
  torch::nn::Linear head{nullptr};
};
TORCH_MODULE(PacCritic);

// ReLU multilayer perceptron producing logits.
struct MlpImpl : torch::nn::Module {
  MlpImpl(int64_t in_features, const std::vector<int64_t>& hidden, int64_t out_features);
  torch::Tensor forward(torch::Tensor x);

  torch::nn::Sequential body;
};
TORCH_MODULE(Mlp);

using NamedTensors = std::map<std::string, torch::Tensor>;

// Deep copy of all parameters and buffers, keyed by qualified name.
NamedTensors CaptureState(const torch::nn::Module& module);
// Copies `state` into the module; throws when names or shapes disagree.
void RestoreState(torch::nn::Module& module, const NamedTensors& state, const std::string& what);

void FreezeParameters(torch::nn::Module& module);

}  // namespace flexcf::nn

#endif  // FLEXCF_NN_MODULES_H_
