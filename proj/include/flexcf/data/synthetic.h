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

#ifndef FLEXCF_DATA_SYNTHETIC_H_
#define FLEXCF_DATA_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>

#include "flexcf/data/dataset.h"

namespace flexcf {

// Two continuous features x1, x2 ~ N(0, 1) with label "pos" iff
// x1 + x2 > 0. Points with |x1 + x2| < margin are redrawn, leaving a gap
// around the boundary.
Dataset MakeSeparableDataset(std::size_t rows, uint64_t seed, double margin = 0.2);

}  // namespace flexcf

#endif  // FLEXCF_DATA_SYNTHETIC_H_
