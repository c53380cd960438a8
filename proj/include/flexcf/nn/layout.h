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

#ifndef FLEXCF_NN_LAYOUT_H_
#define FLEXCF_NN_LAYOUT_H_

#include <torch/torch.h>

#include <cstdint>
#include <span>
#include <vector>

#include "flexcf/cf/template.h"
#include "flexcf/data/encoder.h"
#include "flexcf/data/matrix.h"

namespace flexcf::nn {

enum class SimplexActivation {
  kSoftmax,  // plain softmax
  kGumbel,   // gumbel-softmax relaxation (training)
  kHard,     // one-hot of the argmax (inference)
};

// Tensor-side description of an encoder's segments.
class SegmentLayout {
 public:
  explicit SegmentLayout(const Encoder& encoder);

  int64_t width() const { return width_; }
  int64_t num_columns() const { return num_columns_; }
  const std::vector<Segment>& segments() const { return segments_; }

  // Maps raw generator outputs to model space: identity on standardized
  // scalars, tanh on mode-specific scalars, `simplex` on simplex segments.
  torch::Tensor Activate(const torch::Tensor& raw, SimplexActivation simplex, double tau = 0.2,
                         c10::optional<at::Generator> generator = c10::nullopt) const;

  // [D] float masks selecting real and simplex dimensions.
  const torch::Tensor& real_dims() const { return real_dims_; }
  const torch::Tensor& simplex_dims() const { return simplex_dims_; }

  // [B, C] column mask -> [B, D] dimension mask.
  torch::Tensor ExpandColumnMask(const torch::Tensor& column_mask) const;
  // [B, D] per-dimension values -> [B, C] per-column sums.
  torch::Tensor ColumnSums(const torch::Tensor& per_dim) const;

 private:
  std::vector<Segment> segments_;
  bool tanh_scalars_ = false;
  int64_t width_ = 0;
  int64_t num_columns_ = 0;
  torch::Tensor real_dims_;
  torch::Tensor simplex_dims_;
  torch::Tensor dim_to_column_;  // [C, D] 0/1
};

// Gumbel-softmax over the last dimension.
torch::Tensor GumbelSoftmax(const torch::Tensor& logits, double tau,
                            c10::optional<at::Generator> generator = c10::nullopt);

torch::Tensor ToTensor(const Matrix& m, torch::Dtype dtype = torch::kFloat32);
Matrix ToMatrix(const torch::Tensor& t);

// [B, C] float mask from templates (1 = mutable).
torch::Tensor ColumnMaskTensor(std::span<const CounterfactualTemplate> templates);
torch::Tensor OneHot(std::span<const int> classes, int64_t num_classes);

}  // namespace flexcf::nn

#endif  // FLEXCF_NN_LAYOUT_H_
