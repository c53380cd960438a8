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

#include "flexcf/io/checkpoint.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include "flexcf/common/error.h"

namespace flexcf {

namespace {

constexpr char kMagic[8] = {'F', 'L', 'E', 'X', 'C', 'F', 'C', 'K'};

std::string DtypeName(torch::Dtype dtype) {
  switch (dtype) {
    case torch::kFloat32: return "float32";
    case torch::kFloat64: return "float64";
    case torch::kInt64: return "int64";
    default: throw std::runtime_error("unsupported tensor dtype in checkpoint");
  }
}

torch::Dtype DtypeFromName(const std::string& name, const std::string& source) {
  if (name == "float32") return torch::kFloat32;
  if (name == "float64") return torch::kFloat64;
  if (name == "int64") return torch::kInt64;
  throw UserError(source + ": unknown tensor dtype '" + name + "'");
}

template <typename T>
void Put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T Get(const std::string& bytes, std::size_t& pos, const std::string& source) {
  if (pos + sizeof(T) > bytes.size()) throw UserError(source + ": truncated checkpoint header");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string SerializeArchive(nlohmann::json manifest, const nn::NamedTensors& tensors) {
  std::string blob;
  nlohmann::json index = nlohmann::json::array();
  for (const auto& [name, tensor] : tensors) {
    const auto t = tensor.detach().contiguous().cpu();
    const std::size_t bytes = static_cast<std::size_t>(t.numel()) * t.element_size();
    index.push_back({{"name", name}, {"dtype", DtypeName(t.scalar_type())},
                     {"shape", t.sizes().vec()}, {"offset", blob.size()}, {"bytes", bytes}});
    blob.append(static_cast<const char*>(t.data_ptr()), bytes);
  }
  manifest["tensors"] = index;
  manifest["format_version"] = std::to_string(kCheckpointMajor) + "." + std::to_string(kCheckpointMinor) +
                               "." + std::to_string(kCheckpointPatch);
  const std::string text = manifest.dump();
  std::string out(kMagic, sizeof(kMagic));
  Put<uint16_t>(out, kCheckpointMajor);
  Put<uint16_t>(out, kCheckpointMinor);
  Put<uint16_t>(out, kCheckpointPatch);
  Put<uint16_t>(out, 0);
  Put<uint64_t>(out, text.size());
  out += text;
  out += blob;
  return out;
}

Archive DeserializeArchive(const std::string& bytes, const std::string& source) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw UserError(source + ": not a flexcf checkpoint (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  const auto major = Get<uint16_t>(bytes, pos, source);
  Get<uint16_t>(bytes, pos, source);
  Get<uint16_t>(bytes, pos, source);
  Get<uint16_t>(bytes, pos, source);
  if (major != kCheckpointMajor) {
    throw UserError(source + ": unsupported checkpoint major version " + std::to_string(major) +
                    " (this build reads " + std::to_string(kCheckpointMajor) + ")");
  }
  const auto length = Get<uint64_t>(bytes, pos, source);
  if (pos + length > bytes.size()) throw UserError(source + ": truncated checkpoint manifest");
  Archive archive;
  try {
    archive.manifest = nlohmann::json::parse(bytes.substr(pos, length));
  } catch (const nlohmann::json::exception& e) {
    throw UserError(source + ": corrupt checkpoint manifest: " + e.what());
  }
  const std::size_t base = pos + length;
  for (const auto& entry : archive.manifest.at("tensors")) {
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto size = entry.at("bytes").get<std::size_t>();
    if (base + offset + size > bytes.size()) throw UserError(source + ": truncated tensor data");
    const auto dtype = DtypeFromName(entry.at("dtype").get<std::string>(), source);
    auto t = torch::empty(entry.at("shape").get<std::vector<int64_t>>(), torch::TensorOptions().dtype(dtype));
    if (static_cast<std::size_t>(t.numel()) * t.element_size() != size) {
      throw UserError(source + ": tensor size mismatch for '" + entry.at("name").get<std::string>() + "'");
    }
    std::memcpy(t.data_ptr(), bytes.data() + base + offset, size);
    archive.tensors[entry.at("name").get<std::string>()] = t;
  }
  return archive;
}

void WriteArchive(const std::string& path, nlohmann::json manifest, const nn::NamedTensors& tensors) {
  const std::string bytes = SerializeArchive(std::move(manifest), tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw UserError("failed writing checkpoint '" + path + "'");
}

Archive ReadArchive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("checkpoint '" + path + "' not found");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return DeserializeArchive(buffer.str(), path);
}

void AddPrefixed(nn::NamedTensors& out, const std::string& prefix, const nn::NamedTensors& tensors) {
  for (const auto& [name, t] : tensors) out[prefix + "." + name] = t;
}

nn::NamedTensors TakePrefixed(const nn::NamedTensors& tensors, const std::string& prefix) {
  nn::NamedTensors out;
  const std::string p = prefix + ".";
  for (const auto& [name, t] : tensors) {
    if (name.compare(0, p.size(), p) == 0) out[name.substr(p.size())] = t;
  }
  return out;
}

std::string ArchiveKind(const std::string& path) {
  return ReadArchive(path).manifest.at("kind").get<std::string>();
}

namespace {

void RequireKind(const Archive& a, const std::string& kind, const std::string& path) {
  const std::string found = a.manifest.value("kind", "");
  if (found != kind) throw UserError(path + ": expected a " + kind + " checkpoint, found '" + found + "'");
}

std::shared_ptr<ClassifierModel> ClassifierFromManifest(const nlohmann::json& j, const nn::NamedTensors& tensors,
                                                        const std::string& path) {
  const Schema schema = Schema::FromJson(j.at("schema"));
  auto encoder = std::make_shared<const Encoder>(Encoder::FromJson(j.at("encoder"), schema));
  auto model = std::make_shared<ClassifierModel>(encoder, ClassifierConfig::FromJson(j.at("config")));
  nn::RestoreState(*model->network(), tensors, path + " classifier");
  model->network()->eval();
  nn::FreezeParameters(*model->network());
  model->set_curve(ClassifierCurveFromJson(j.at("curve")), j.at("best_epoch").get<int>());
  return model;
}

nlohmann::json ClassifierManifest(const ClassifierModel& model) {
  return {{"kind", "classifier"},
          {"schema", model.schema().ToJson()},
          {"encoder", model.encoder().ToJson()},
          {"config", model.config().ToJson()},
          {"curve", CurveToJson(model.curve())},
          {"best_epoch", model.best_epoch()}};
}

}  // namespace

void SaveClassifier(const std::string& path, const ClassifierModel& model, const EmpiricalCdf& cdf) {
  nlohmann::json manifest = ClassifierManifest(model);
  manifest["ecdf"] = cdf.ToJson();
  WriteArchive(path, manifest, nn::CaptureState(*model.network()));
}

LoadedClassifier LoadClassifierArchive(const std::string& path) {
  Archive a = ReadArchive(path);
  RequireKind(a, "classifier", path);
  return {ClassifierFromManifest(a.manifest, a.tensors, path), EmpiricalCdf::FromJson(a.manifest.at("ecdf"))};
}

std::shared_ptr<ClassifierModel> LoadClassifier(const std::string& path) {
  return LoadClassifierArchive(path).model;
}

void SaveFcegan(const std::string& path, FceganModel& model, const EmpiricalCdf& cdf) {
  nlohmann::json manifest = {{"kind", "fcegan"},
                             {"schema", model.schema().ToJson()},
                             {"encoder", model.encoder().ToJson()},
                             {"config", model.config().ToJson()},
                             {"curve", FceganCurveToJson(model.curve())},
                             {"best_epoch", model.best_epoch()},
                             {"ecdf", cdf.ToJson()}};
  nn::NamedTensors tensors;
  AddPrefixed(tensors, "generator", nn::CaptureState(*model.generator()));
  AddPrefixed(tensors, "critic_og", nn::CaptureState(*model.critic_og()));
  AddPrefixed(tensors, "critic_cf", nn::CaptureState(*model.critic_cf()));
  if (const ClassifierModel* clf = model.classifier()) {
    manifest["classifier"] = ClassifierManifest(*clf);
    AddPrefixed(tensors, "classifier", nn::CaptureState(*clf->network()));
  }
  WriteArchive(path, manifest, tensors);
}

LoadedFcegan LoadFcegan(const std::string& path) {
  Archive a = ReadArchive(path);
  RequireKind(a, "fcegan", path);
  const auto& j = a.manifest;
  const Schema schema = Schema::FromJson(j.at("schema"));
  auto encoder = std::make_shared<const Encoder>(Encoder::FromJson(j.at("encoder"), schema));
  std::shared_ptr<const ClassifierModel> classifier;
  if (j.contains("classifier")) {
    classifier = ClassifierFromManifest(j.at("classifier"), TakePrefixed(a.tensors, "classifier"), path);
  }
  auto model = std::make_shared<FceganModel>(encoder, FceganConfig::FromJson(j.at("config")), classifier);
  nn::RestoreState(*model->generator(), TakePrefixed(a.tensors, "generator"), path + " generator");
  nn::RestoreState(*model->critic_og(), TakePrefixed(a.tensors, "critic_og"), path + " critic_og");
  nn::RestoreState(*model->critic_cf(), TakePrefixed(a.tensors, "critic_cf"), path + " critic_cf");
  model->generator()->eval();
  model->critic_og()->eval();
  model->critic_cf()->eval();
  model->set_curve(FceganCurveFromJson(j.at("curve")), j.at("best_epoch").get<int>());
  return {model, EmpiricalCdf::FromJson(j.at("ecdf"))};
}

void SaveCritic(const std::string& path, FakenessCritic& critic, const FakenessReference& reference) {
  nlohmann::json manifest = {{"kind", "critic"},
                             {"schema", critic.schema().ToJson()},
                             {"encoder", critic.encoder().ToJson()},
                             {"config", critic.config().ToJson()},
                             {"curve", critic.curve()},
                             {"reference", {{"mean", reference.mean}, {"std", reference.std},
                                            {"count", reference.count}}}};
  WriteArchive(path, manifest, nn::CaptureState(*critic.network()));
}

LoadedCritic LoadCritic(const std::string& path) {
  Archive a = ReadArchive(path);
  RequireKind(a, "critic", path);
  const auto& j = a.manifest;
  const Schema schema = Schema::FromJson(j.at("schema"));
  auto encoder = std::make_shared<const Encoder>(Encoder::FromJson(j.at("encoder"), schema));
  auto critic = std::make_shared<FakenessCritic>(encoder, CriticConfig::FromJson(j.at("config")));
  nn::RestoreState(*critic->network(), a.tensors, path + " critic");
  critic->network()->eval();
  nn::FreezeParameters(*critic->network());
  critic->set_curve(j.at("curve").get<std::vector<double>>());
  const auto& r = j.at("reference");
  return {critic, {r.at("mean").get<double>(), r.at("std").get<double>(), r.at("count").get<std::size_t>()}};
}

}  // namespace flexcf
