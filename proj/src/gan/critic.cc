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

#include "flexcf/gan/critic.h"

#include <cmath>
#include <numeric>

#include "flexcf/common/error.h"
#include "flexcf/common/log.h"
#include "flexcf/common/rng.h"
#include "flexcf/gan/losses.h"

namespace flexcf {

void CriticConfig::Validate() const {
  if (gen_hidden.empty() || disc_hidden.empty()) throw ConfigError("critic hidden dims must not be empty");
  if (batch_size <= 0 || max_epochs <= 0 || noise_dim <= 0 || lr_gen <= 0 || lr_disc <= 0 || tau <= 0) {
    throw ConfigError("critic settings must be positive");
  }
  if (dropout < 0 || dropout >= 1) throw ConfigError("critic.dropout must lie in [0, 1)");
}

nlohmann::json CriticConfig::ToJson() const {
  return {{"gen_hidden", gen_hidden}, {"disc_hidden", disc_hidden}, {"lr_gen", lr_gen},
          {"lr_disc", lr_disc}, {"weight_decay", weight_decay}, {"adam_betas", {beta1, beta2}},
          {"batch_size", batch_size}, {"max_epochs", max_epochs},
          {"gp_coefficient", gp_coefficient}, {"noise_dim", noise_dim}, {"tau", tau},
          {"dropout", dropout}};
}

CriticConfig CriticConfig::FromJson(const nlohmann::json& j) {
  CriticConfig c;
  c.gen_hidden = j.at("gen_hidden").get<std::vector<int64_t>>();
  c.disc_hidden = j.at("disc_hidden").get<std::vector<int64_t>>();
  c.lr_gen = j.at("lr_gen").get<double>();
  c.lr_disc = j.at("lr_disc").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.beta1 = j.at("adam_betas").at(0).get<double>();
  c.beta2 = j.at("adam_betas").at(1).get<double>();
  c.batch_size = j.at("batch_size").get<int64_t>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.gp_coefficient = j.at("gp_coefficient").get<double>();
  c.noise_dim = j.at("noise_dim").get<int64_t>();
  c.tau = j.at("tau").get<double>();
  c.dropout = j.at("dropout").get<double>();
  return c;
}

FakenessCritic::FakenessCritic(std::shared_ptr<const Encoder> encoder, CriticConfig config)
    : encoder_(std::move(encoder)), config_(std::move(config)) {
  config_.Validate();
  critic_ = nn::PacCritic(static_cast<int64_t>(encoder_->width()), config_.disc_hidden, 1, config_.dropout);
  critic_->eval();
}

std::vector<double> FakenessCritic::Score(std::span<const Row> rows) const {
  if (rows.empty()) return {};
  torch::NoGradGuard no_grad;
  auto out = critic_->forward(nn::ToTensor(encoder_->Encode(rows))).to(torch::kFloat64).contiguous();
  std::vector<double> scores(rows.size());
  const double* data = out.data_ptr<double>();
  for (std::size_t i = 0; i < rows.size(); ++i) scores[i] = -data[i];
  return scores;
}

torch::Tensor FakenessCritic::Realism(const torch::Tensor& encoded) const {
  if (encoded.scalar_type() == torch::kFloat64) {
    nn::PacCritic copy(static_cast<int64_t>(encoder_->width()), config_.disc_hidden, 1, config_.dropout);
    nn::RestoreState(*copy, nn::CaptureState(*critic_), "critic");
    copy->to(torch::kFloat64);
    copy->eval();
    nn::FreezeParameters(*copy);
    return copy->forward(encoded).squeeze(1);
  }
  return critic_->forward(encoded).squeeze(1);
}

FakenessCritic TrainCritic(std::span<const Row> train_rows, std::shared_ptr<const Encoder> encoder,
                           const CriticConfig& config, uint64_t seed) {
  config.Validate();
  if (train_rows.size() < 2) throw UserError("critic training needs at least 2 rows");
  torch::manual_seed(seed);
  FakenessCritic critic(encoder, config);
  nn::PacCritic& D = critic.network();
  const int64_t width = static_cast<int64_t>(encoder->width());
  nn::ResidualGenerator G(config.noise_dim, config.gen_hidden, width);
  const nn::SegmentLayout layout(*encoder);

  Rng rng(Rng::Combine(seed, 0xc7171c));
  Rng encode_rng(Rng::Combine(seed, 0xe2c0de));
  const auto x_all = nn::ToTensor(
      encoder->Encode(train_rows, encoder->mode() == TransformMode::kGmm ? &encode_rng : nullptr));
  const int64_t n = x_all.size(0);
  const int64_t batch = std::min<int64_t>(config.batch_size, n);
  const int64_t steps = std::max<int64_t>(1, n / batch);
  std::vector<int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  auto options = [&](double lr) {
    return torch::optim::AdamOptions(lr).betas({config.beta1, config.beta2}).weight_decay(config.weight_decay);
  };
  torch::optim::Adam opt_g(G->parameters(), options(config.lr_gen));
  torch::optim::Adam opt_d(D->parameters(), options(config.lr_disc));
  auto critic_fn = [&](const torch::Tensor& x) { return D->forward(x); };

  std::vector<double> curve;
  G->train();
  D->train();
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.Shuffle(std::span<int64_t>(order));
    double wasserstein = 0.0;
    for (int64_t step = 0; step < steps; ++step) {
      std::vector<int64_t> idx(order.begin() + step * batch, order.begin() + (step + 1) * batch);
      const auto real = x_all.index_select(0, torch::tensor(idx));
      auto fake = layout.Activate(G->forward(torch::randn({batch, config.noise_dim})),
                                  nn::SimplexActivation::kGumbel, config.tau);
      const auto fake_d = fake.detach();
      const auto d_real = D->forward(real);
      const auto d_fake = D->forward(fake_d);
      const auto loss_d = CriticWassersteinLoss(d_real, d_fake) +
                          GradientPenalty(critic_fn, real, fake_d, 1, config.gp_coefficient);
      opt_d.zero_grad();
      loss_d.backward();
      opt_d.step();

      fake = layout.Activate(G->forward(torch::randn({batch, config.noise_dim})),
                             nn::SimplexActivation::kGumbel, config.tau);
      const auto loss_g = -D->forward(fake).mean();
      opt_g.zero_grad();
      loss_g.backward();
      opt_g.step();
      const double ld = loss_d.item<double>(), lg = loss_g.item<double>();
      if (!std::isfinite(ld) || !std::isfinite(lg)) {
        throw TrainingError("critic training diverged at epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(step));
      }
      wasserstein += (d_real.mean() - d_fake.mean()).item<double>();
    }
    curve.push_back(wasserstein / static_cast<double>(steps));
    FLEXCF_LOG(kDebug) << "critic epoch " << epoch << " wasserstein " << curve.back();
  }
  D->eval();
  nn::FreezeParameters(*D);
  critic.set_curve(std::move(curve));
  return critic;
}

}  // namespace flexcf
