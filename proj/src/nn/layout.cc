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

#include "flexcf/nn/layout.h"

#include <cstring>

namespace flexcf::nn {

SegmentLayout::SegmentLayout(const Encoder& encoder)
    : tanh_scalars_(encoder.mode() == TransformMode::kGmm),
      width_(static_cast<int64_t>(encoder.width())),
      num_columns_(static_cast<int64_t>(encoder.blocks().size())) {
  auto real = torch::zeros({width_});
  auto simplex = torch::zeros({width_});
  dim_to_column_ = torch::zeros({num_columns_, width_});
  for (const ColumnBlock& block : encoder.blocks()) {
    for (const Segment& s : block.segments) {
      segments_.push_back(s);
      auto range = torch::indexing::Slice(static_cast<int64_t>(s.offset),
                                          static_cast<int64_t>(s.offset + s.width));
      (s.kind == SegmentKind::kReal ? real : simplex).index_put_({range}, 1.0);
    }
    dim_to_column_.index_put_({static_cast<int64_t>(block.column),
                               torch::indexing::Slice(static_cast<int64_t>(block.offset),
                                                      static_cast<int64_t>(block.offset + block.width))},
                              1.0);
  }
  real_dims_ = real;
  simplex_dims_ = simplex;
}

torch::Tensor SegmentLayout::Activate(const torch::Tensor& raw, SimplexActivation simplex,
                                      double tau, c10::optional<at::Generator> generator) const {
  std::vector<torch::Tensor> parts;
  parts.reserve(segments_.size());
  for (const Segment& s : segments_) {
    torch::Tensor piece = raw.narrow(1, static_cast<int64_t>(s.offset), static_cast<int64_t>(s.width));
    if (s.kind == SegmentKind::kReal) {
      parts.push_back(tanh_scalars_ ? torch::tanh(piece) : piece);
      continue;
    }
    switch (simplex) {
      case SimplexActivation::kSoftmax:
        parts.push_back(torch::softmax(piece, 1));
        break;
      case SimplexActivation::kGumbel:
        parts.push_back(GumbelSoftmax(piece, tau, generator));
        break;
      case SimplexActivation::kHard: {
        auto index = piece.argmax(1, /*keepdim=*/true);
        parts.push_back(torch::zeros_like(piece).scatter_(1, index, 1.0));
        break;
      }
    }
  }
  return torch::cat(parts, 1);
}

torch::Tensor SegmentLayout::ExpandColumnMask(const torch::Tensor& column_mask) const {
  return torch::matmul(column_mask, dim_to_column_.to(column_mask.dtype()));
}

torch::Tensor SegmentLayout::ColumnSums(const torch::Tensor& per_dim) const {
  return torch::matmul(per_dim, dim_to_column_.to(per_dim.dtype()).t());
}

torch::Tensor GumbelSoftmax(const torch::Tensor& logits, double tau,
                            c10::optional<at::Generator> generator) {
  auto u = torch::rand(logits.sizes(), generator, logits.options());
  auto gumbel = -torch::log(-torch::log(u + 1e-10) + 1e-10);
  return torch::softmax((logits + gumbel) / tau, -1);
}

torch::Tensor ToTensor(const Matrix& m, torch::Dtype dtype) {
  auto t = torch::from_blob(const_cast<double*>(m.data.data()),
                            {static_cast<int64_t>(m.rows), static_cast<int64_t>(m.cols)},
                            torch::kFloat64);
  return t.to(dtype).clone();
}

Matrix ToMatrix(const torch::Tensor& t) {
  auto d = t.detach().to(torch::kFloat64).contiguous();
  Matrix m(static_cast<std::size_t>(d.size(0)), static_cast<std::size_t>(d.size(1)));
  std::memcpy(m.data.data(), d.data_ptr<double>(), m.data.size() * sizeof(double));
  return m;
}

torch::Tensor ColumnMaskTensor(std::span<const CounterfactualTemplate> templates) {
  const int64_t c = templates.empty() ? 0 : static_cast<int64_t>(templates.front().num_features());
  auto mask = torch::zeros({static_cast<int64_t>(templates.size()), c});
  auto acc = mask.accessor<float, 2>();
  for (std::size_t i = 0; i < templates.size(); ++i) {
    for (int64_t j = 0; j < c; ++j) acc[static_cast<int64_t>(i)][j] = templates[i].mutable_mask[j] ? 1.f : 0.f;
  }
  return mask;
}

torch::Tensor OneHot(std::span<const int> classes, int64_t num_classes) {
  auto out = torch::zeros({static_cast<int64_t>(classes.size()), num_classes});
  auto acc = out.accessor<float, 2>();
  for (std::size_t i = 0; i < classes.size(); ++i) acc[static_cast<int64_t>(i)][classes[i]] = 1.f;
  return out;
}

}  // namespace flexcf::nn
