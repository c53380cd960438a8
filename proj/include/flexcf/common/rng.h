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

#ifndef FLEXCF_COMMON_RNG_H_
#define FLEXCF_COMMON_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace flexcf {

// Seeded random stream with platform-independent derived distributions.
// std::uniform_*_distribution are implementation-defined, which would break
// bitwise reproducibility of checkpoints and sweep results across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  uint64_t UniformInt(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return draw % n;
  }

  bool Bernoulli(double p) { return Uniform() < p; }

  double Normal();

  template <typename T>
  void Shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[UniformInt(i)]);
    }
  }

  // Independent child stream; the parent advances by one draw.
  Rng Fork() { return Rng(Mix(engine_())); }

  // SplitMix64 finalizer, used to derive well-separated seeds.
  static uint64_t Mix(uint64_t x);
  static uint64_t Combine(uint64_t a, uint64_t b) { return Mix(a ^ (Mix(b) + 0x9e3779b97f4a7c15ULL)); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace flexcf

#endif  // FLEXCF_COMMON_RNG_H_
