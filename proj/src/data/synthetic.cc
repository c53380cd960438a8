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

#include "flexcf/data/synthetic.h"

#include <cmath>

#include "flexcf/common/rng.h"

namespace flexcf {

Dataset MakeSeparableDataset(std::size_t rows, uint64_t seed, double margin) {
  Schema schema({{"x1", ColumnKind::kContinuous, {}}, {"x2", ColumnKind::kContinuous, {}}}, "label",
                {"neg", "pos"});
  Dataset data{schema, {}, {}};
  Rng rng(seed);
  while (data.rows.size() < rows) {
    const double x1 = rng.Normal();
    const double x2 = rng.Normal();
    if (std::abs(x1 + x2) < margin) continue;
    data.rows.push_back({x1, x2});
    data.labels.push_back(x1 + x2 > 0 ? 1 : 0);
  }
  return data;
}

}  // namespace flexcf
