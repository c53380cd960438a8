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

#include "flexcf/nn/modules.h"

#include "flexcf/common/error.h"

namespace flexcf::nn {

ResidualImpl::ResidualImpl(int64_t in_features, int64_t out_features) {
  fc = register_module("fc", torch::nn::Linear(in_features, out_features));
  bn = register_module("bn", torch::nn::BatchNorm1d(out_features));
}

torch::Tensor ResidualImpl::forward(const torch::Tensor& x) {
  return torch::cat({torch::relu(bn(fc(x))), x}, 1);
}

ResidualGeneratorImpl::ResidualGeneratorImpl(int64_t in_features,
                                             const std::vector<int64_t>& hidden,
                                             int64_t out_features) {
  layers = register_module("layers", torch::nn::ModuleList());
  int64_t width = in_features;
  for (int64_t h : hidden) {
    layers->push_back(Residual(width, h));
    width += h;
  }
  head = register_module("head", torch::nn::Linear(width, out_features));
}

torch::Tensor ResidualGeneratorImpl::forward(torch::Tensor x) {
  for (const auto& layer : *layers) x = layer->as<Residual>()->forward(x);
  return head(x);
}

PacCriticImpl::PacCriticImpl(int64_t in, const std::vector<int64_t>& hidden, int64_t pac_size,
                             double dropout_p)
    : in_features(in), pac(pac_size), dropout(dropout_p) {
  layers = register_module("layers", torch::nn::ModuleList());
  int64_t width = in * pac;
  for (int64_t h : hidden) {
    layers->push_back(torch::nn::Linear(width, h));
    width = h;
  }
  head = register_module("head", torch::nn::Linear(width, 1));
}

torch::Tensor PacCriticImpl::forward(const torch::Tensor& x) {
  TORCH_CHECK(x.size(0) % pac == 0, "critic batch ", x.size(0), " not divisible by pac ", pac);
  torch::Tensor h = x.reshape({-1, in_features * pac});
  for (const auto& layer : *layers) {
    h = torch::leaky_relu(layer->as<torch::nn::Linear>()->forward(h), 0.2);
    if (dropout > 0.0) h = torch::dropout(h, dropout, is_training());
  }
  return head(h);
}

MlpImpl::MlpImpl(int64_t in_features, const std::vector<int64_t>& hidden, int64_t out_features) {
  body = register_module("body", torch::nn::Sequential());
  int64_t width = in_features;
  for (int64_t h : hidden) {
    body->push_back(torch::nn::Linear(width, h));
    body->push_back(torch::nn::ReLU());
    width = h;
  }
  body->push_back(torch::nn::Linear(width, out_features));
}

torch::Tensor MlpImpl::forward(torch::Tensor x) { return body->forward(x); }

NamedTensors CaptureState(const torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  NamedTensors state;
  for (const auto& item : module.named_parameters(true)) state[item.key()] = item.value().detach().clone();
  for (const auto& item : module.named_buffers(true)) state[item.key()] = item.value().detach().clone();
  return state;
}

void RestoreState(torch::nn::Module& module, const NamedTensors& state, const std::string& what) {
  torch::NoGradGuard no_grad;
  std::size_t expected = 0;
  auto copy = [&](const std::string& name, torch::Tensor target) {
    auto it = state.find(name);
    if (it == state.end()) throw UserError(what + ": missing tensor '" + name + "'");
    if (it->second.sizes() != target.sizes()) {
      throw UserError(what + ": shape mismatch for tensor '" + name + "'");
    }
    target.copy_(it->second);
    ++expected;
  };
  for (auto& item : module.named_parameters(true)) copy(item.key(), item.value());
  for (auto& item : module.named_buffers(true)) copy(item.key(), item.value());
  if (expected != state.size()) throw UserError(what + ": unexpected extra tensors");
}

void FreezeParameters(torch::nn::Module& module) {
  for (auto& p : module.parameters()) p.set_requires_grad(false);
}

}  // namespace flexcf::nn
