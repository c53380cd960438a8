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

#ifndef FLEXCF_GAN_CRITIC_H_
#define FLEXCF_GAN_CRITIC_H_

#include <torch/torch.h>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "flexcf/data/encoder.h"
#include "flexcf/metrics/metrics.h"
#include "flexcf/nn/layout.h"
#include "flexcf/nn/modules.h"
#include "json.hpp"

namespace flexcf {

struct CriticConfig {
  std::vector<int64_t> gen_hidden = {256, 256};
  std::vector<int64_t> disc_hidden = {256, 256};
  double lr_gen = 2e-4;
  double lr_disc = 2e-4;
  double weight_decay = 1e-6;
  double beta1 = 0.5;
  double beta2 = 0.9;
  int64_t batch_size = 500;
  int max_epochs = 50;
  double gp_coefficient = 10.0;
  int64_t noise_dim = 128;
  double tau = 0.2;
  double dropout = 0.5;

  void Validate() const;
  nlohmann::json ToJson() const;
  static CriticConfig FromJson(const nlohmann::json& json);
};

// Independent realism critic of a tabular WGAN-GP trained on real rows
// only. Scores single rows (no packing).
class FakenessCritic : public FakenessScorer {
 public:
  FakenessCritic(std::shared_ptr<const Encoder> encoder, CriticConfig config);

  const Schema& schema() const { return encoder_->schema(); }
  const Encoder& encoder() const { return *encoder_; }
  const CriticConfig& config() const { return config_; }

  // Negated critic output; higher = faker. Deterministic.
  std::vector<double> Score(std::span<const Row> rows) const override;
  // Differentiable critic output on encoded rows (higher = more real);
  // float32 or float64 input.
  torch::Tensor Realism(const torch::Tensor& encoded) const;

  nn::PacCritic& network() { return critic_; }
  const std::vector<double>& curve() const { return curve_; }
  void set_curve(std::vector<double> curve) { curve_ = std::move(curve); }

 private:
  std::shared_ptr<const Encoder> encoder_;
  CriticConfig config_;
  mutable nn::PacCritic critic_{nullptr};
  std::vector<double> curve_;  // per-epoch critic Wasserstein estimate
};

FakenessCritic TrainCritic(std::span<const Row> train_rows, std::shared_ptr<const Encoder> encoder,
                           const CriticConfig& config, uint64_t seed);

}  // namespace flexcf

#endif  // FLEXCF_GAN_CRITIC_H_
