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

#ifndef FLEXCF_TESTS_TEST_UTIL_H_
#define FLEXCF_TESTS_TEST_UTIL_H_

#include <torch/torch.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "flexcf/classifier/classifier.h"
#include "flexcf/common/rng.h"
#include "flexcf/data/dataset.h"
#include "flexcf/data/schema.h"
#include "flexcf/gan/critic.h"
#include "flexcf/gan/fcegan.h"

namespace flexcf::testing {

// age, color{red,green,blue}, size, shape{circle,square} -> label{no,yes}.
inline Schema MixedSchema() {
  return Schema({{"age", ColumnKind::kContinuous, {}},
                 {"color", ColumnKind::kCategorical, {"red", "green", "blue"}},
                 {"size", ColumnKind::kContinuous, {}},
                 {"shape", ColumnKind::kCategorical, {"circle", "square"}}},
                "label", {"no", "yes"});
}

// label = yes iff age/10 - 4 + 1.5*(color == blue) - size > 0.
inline Dataset MakeMixedDataset(std::size_t n, uint64_t seed) {
  Dataset d;
  d.schema = MixedSchema();
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double age = std::round(20.0 + 40.0 * rng.Uniform());
    const double color = static_cast<double>(rng.UniformInt(3));
    const double size = rng.Normal();
    const double shape = static_cast<double>(rng.UniformInt(2));
    const double score = age / 10.0 - 4.0 + (color == 2.0 ? 1.5 : 0.0) - size;
    d.rows.push_back({age, color, size, shape});
    d.labels.push_back(score > 0 ? 1 : 0);
  }
  return d;
}

inline ClassifierConfig TinyClassifierConfig() {
  ClassifierConfig c;
  c.hidden_dims = {32, 32};
  c.batch_size = 100;
  c.max_epochs = 5;
  return c;
}

inline FceganConfig TinyFceganConfig(FceganMode mode = FceganMode::kClassifier) {
  FceganConfig c = FceganConfig::ForMode(mode);
  c.gen_hidden = {32, 32};
  c.disc_hidden = {32, 32};
  c.batch_size = 100;
  c.max_epochs = 2;
  c.noise_dim = 8;
  c.validation_cap = 50;
  return c;
}

inline CriticConfig TinyCriticConfig() {
  CriticConfig c;
  c.gen_hidden = {32};
  c.disc_hidden = {32};
  c.batch_size = 100;
  c.max_epochs = 2;
  c.noise_dim = 8;
  return c;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("flexcf_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace flexcf::testing

#endif  // FLEXCF_TESTS_TEST_UTIL_H_
