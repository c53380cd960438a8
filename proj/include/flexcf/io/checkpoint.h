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

#ifndef FLEXCF_IO_CHECKPOINT_H_
#define FLEXCF_IO_CHECKPOINT_H_

#include <cstdint>
#include <memory>
#include <string>

#include "flexcf/classifier/classifier.h"
#include "flexcf/data/ecdf.h"
#include "flexcf/gan/critic.h"
#include "flexcf/gan/fcegan.h"
#include "flexcf/nn/modules.h"
#include "json.hpp"

namespace flexcf {

// Archive layout (little-endian):
//   bytes 0-7   magic "FLEXCFCK"
//   u16 major, u16 minor, u16 patch, u16 reserved
//   u64 manifest length, manifest JSON (UTF-8)
//   tensor blobs, raw and contiguous, at the offsets listed in the manifest
// Manifest: {"format_version", "kind", "schema", "encoder", "config",
// "curve", ..., "tensors": [{"name", "dtype", "shape", "offset", "bytes"}]}.
// Readers reject other major versions.
inline constexpr uint16_t kCheckpointMajor = 1;
inline constexpr uint16_t kCheckpointMinor = 0;
inline constexpr uint16_t kCheckpointPatch = 0;

struct Archive {
  nlohmann::json manifest;
  nn::NamedTensors tensors;
};

void WriteArchive(const std::string& path, nlohmann::json manifest, const nn::NamedTensors& tensors);
Archive ReadArchive(const std::string& path);
std::string SerializeArchive(nlohmann::json manifest, const nn::NamedTensors& tensors);
Archive DeserializeArchive(const std::string& bytes, const std::string& source = "<memory>");

// Prefixes every tensor name with `prefix` + ".".
void AddPrefixed(nn::NamedTensors& out, const std::string& prefix, const nn::NamedTensors& tensors);
nn::NamedTensors TakePrefixed(const nn::NamedTensors& tensors, const std::string& prefix);

// The training-split ECDF is stored alongside for metrics.
void SaveClassifier(const std::string& path, const ClassifierModel& model, const EmpiricalCdf& cdf);
struct LoadedClassifier {
  std::shared_ptr<ClassifierModel> model;
  EmpiricalCdf cdf;
};
LoadedClassifier LoadClassifierArchive(const std::string& path);
std::shared_ptr<ClassifierModel> LoadClassifier(const std::string& path);

// The ECDF of the training split travels with the generator for metrics.
// Classifier weights are embedded when the model links a classifier.
void SaveFcegan(const std::string& path, FceganModel& model, const EmpiricalCdf& cdf);
struct LoadedFcegan {
  std::shared_ptr<FceganModel> model;
  EmpiricalCdf cdf;
};
LoadedFcegan LoadFcegan(const std::string& path);

void SaveCritic(const std::string& path, FakenessCritic& critic, const FakenessReference& reference);
struct LoadedCritic {
  std::shared_ptr<FakenessCritic> critic;
  FakenessReference reference;
};
LoadedCritic LoadCritic(const std::string& path);

// Kind recorded in an archive's manifest.
std::string ArchiveKind(const std::string& path);

}  // namespace flexcf

#endif  // FLEXCF_IO_CHECKPOINT_H_
