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

#include "flexcf/data/gmm.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace flexcf {

double Digamma(double x) {
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132)))));
  return result;
}

GaussianMixture1D GaussianMixture1D::Single(double mean, double std) {
  GaussianMixture1D gmm;
  gmm.weights_ = {1.0};
  gmm.means_ = {mean};
  gmm.stds_ = {std};
  return gmm;
}

GaussianMixture1D GaussianMixture1D::Fit(std::span<const double> values,
                                         const GmmOptions& options) {
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("GaussianMixture1D::Fit on empty data");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  const std::size_t k = std::min(options.max_components, n);
  if (var < 1e-12 || k < 2) return Single(mean, std::sqrt(std::max(var, 1e-16)));

  // Priors: mean ~ N(m0, 1/(beta0*lambda)), precision lambda ~ Gamma(nu0/2, rate 1/(2 W0)).
  const double alpha0 = options.weight_concentration;
  const double beta0 = 1.0;
  const double m0 = mean;
  const double nu0 = 1.0;
  const double w0_inv = var;
  const double reg = 1e-6 * var;

  // Deterministic start: hard assignment to the nearest of k quantile centres.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> centres(k);
  for (std::size_t j = 0; j < k; ++j) {
    centres[j] = sorted[std::min(n - 1, static_cast<std::size_t>((j + 0.5) * n / k))];
  }
  std::vector<double> resp(n * k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (std::abs(values[i] - centres[j]) < std::abs(values[i] - centres[best])) best = j;
    }
    resp[i * k + best] = 1.0;
  }

  std::vector<double> alpha(k), beta(k), m(k), nu(k), w_inv(k);
  std::vector<double> log_rho(k);
  double previous_bound = -INFINITY;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // M-step: posterior hyper-parameters from responsibilities.
    for (std::size_t j = 0; j < k; ++j) {
      double nk = 1e-10, sx = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * k + j];
        sx += resp[i * k + j] * values[i];
      }
      const double xbar = sx / nk;
      double sk = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = values[i] - xbar;
        sk += resp[i * k + j] * d * d;
      }
      sk = sk / nk + reg;
      alpha[j] = alpha0 + nk;
      beta[j] = beta0 + nk;
      m[j] = (beta0 * m0 + nk * xbar) / beta[j];
      nu[j] = nu0 + nk;
      w_inv[j] = w0_inv + nk * sk + beta0 * nk / (beta0 + nk) * (xbar - m0) * (xbar - m0);
    }
    // E-step.
    const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    double bound = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double max_log = -INFINITY;
      for (std::size_t j = 0; j < k; ++j) {
        const double log_pi = Digamma(alpha[j]) - Digamma(alpha_sum);
        const double log_lambda = Digamma(nu[j] / 2) + std::log(2.0) - std::log(w_inv[j]);
        const double d = values[i] - m[j];
        const double quad = 1.0 / beta[j] + nu[j] / w_inv[j] * d * d;
        log_rho[j] = log_pi + 0.5 * log_lambda - 0.5 * std::log(2 * std::numbers::pi) - 0.5 * quad;
        max_log = std::max(max_log, log_rho[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) total += std::exp(log_rho[j] - max_log);
      for (std::size_t j = 0; j < k; ++j) resp[i * k + j] = std::exp(log_rho[j] - max_log) / total;
      bound += max_log + std::log(total);
    }
    bound /= n;
    if (std::abs(bound - previous_bound) < options.tolerance) break;
    previous_bound = bound;
  }

  const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  GaussianMixture1D gmm;
  for (std::size_t j = 0; j < k; ++j) {
    const double weight = alpha[j] / alpha_sum;
    if (weight <= options.active_threshold) continue;
    gmm.weights_.push_back(weight);
    gmm.means_.push_back(m[j]);
    gmm.stds_.push_back(std::sqrt(std::max(w_inv[j] / nu[j], 1e-16)));
  }
  if (gmm.weights_.empty()) return Single(mean, std::sqrt(var));
  const double total = std::accumulate(gmm.weights_.begin(), gmm.weights_.end(), 0.0);
  for (double& w : gmm.weights_) w /= total;
  return gmm;
}

std::vector<double> GaussianMixture1D::Responsibilities(double value) const {
  std::vector<double> log_p(weights_.size());
  double max_log = -INFINITY;
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    const double z = (value - means_[j]) / stds_[j];
    log_p[j] = std::log(weights_[j]) - std::log(stds_[j]) - 0.5 * z * z;
    max_log = std::max(max_log, log_p[j]);
  }
  double total = 0.0;
  for (double& lp : log_p) {
    lp = std::exp(lp - max_log);
    total += lp;
  }
  for (double& lp : log_p) lp /= total;
  return log_p;
}

nlohmann::json GaussianMixture1D::ToJson() const {
  return {{"weights", weights_}, {"means", means_}, {"stds", stds_}};
}

GaussianMixture1D GaussianMixture1D::FromJson(const nlohmann::json& json) {
  GaussianMixture1D gmm;
  gmm.weights_ = json.at("weights").get<std::vector<double>>();
  gmm.means_ = json.at("means").get<std::vector<double>>();
  gmm.stds_ = json.at("stds").get<std::vector<double>>();
  return gmm;
}

}  // namespace flexcf
