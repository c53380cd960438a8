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

#ifndef FLEXCF_DATA_GMM_H_
#define FLEXCF_DATA_GMM_H_

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

namespace flexcf {

struct GmmOptions {
  std::size_t max_components = 10;
  // Symmetric Dirichlet concentration on the mixture weights; small values
  // let variational inference switch unneeded components off.
  double weight_concentration = 1e-3;
  // Components with posterior weight below this are dropped.
  double active_threshold = 5e-3;
  int max_iterations = 200;
  double tolerance = 1e-6;
};

// One-dimensional variational Bayesian Gaussian mixture (Dirichlet weights,
// Normal-Gamma component priors), used for mode-specific normalization.
// Only the active components are kept after fitting.
class GaussianMixture1D {
 public:
  static GaussianMixture1D Fit(std::span<const double> values, const GmmOptions& options = {});
  // Single component at (mean, std).
  static GaussianMixture1D Single(double mean, double std);

  std::size_t num_components() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& stds() const { return stds_; }

  // Posterior component probabilities for `value` (sums to 1).
  std::vector<double> Responsibilities(double value) const;

  nlohmann::json ToJson() const;
  static GaussianMixture1D FromJson(const nlohmann::json& json);

 private:
  std::vector<double> weights_;
  std::vector<double> means_;
  std::vector<double> stds_;
};

double Digamma(double x);

}  // namespace flexcf

#endif  // FLEXCF_DATA_GMM_H_
