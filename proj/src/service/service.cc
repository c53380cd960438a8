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

#include "flexcf/service/service.h"

#include <algorithm>
#include <regex>
#include <utility>

#include "flexcf/cf/template.h"
#include "flexcf/common/error.h"
#include "flexcf/common/log.h"
#include "flexcf/io/checkpoint.h"
#include "flexcf/metrics/metrics.h"
#include "flexcf/optim/rgd.h"
#include "httplib.h"

namespace flexcf {
namespace {

using nlohmann::json;

constexpr std::size_t kMaxCandidates = 1000;
constexpr int kMaxSteps = 1000;

HttpResult Error(int status, const std::string& message, json fields = json::array()) {
  return {status, {{"error", message}, {"fields", std::move(fields)}}};
}

HttpResult FieldError(const std::string& field, const std::string& message) {
  return Error(422, message, json::array({{{"field", field}, {"message", message}}}));
}

json EntrySummary(const RegistryEntry& entry) {
  json j = entry.ToJson();
  j.erase("checkpoint");
  return j;
}

json CandidateToJson(const Schema& schema, const InstanceCandidates& inst, std::size_t i) {
  const Row& cand = inst.candidates[i];
  json changed = json::array();
  for (std::size_t j = 0; j < schema.num_features(); ++j) {
    if (cand[j] != inst.original[j]) changed.push_back(schema.column(j).name);
  }
  json out = {{"values", schema.RowToJson(cand)}, {"changed", std::move(changed)}};
  if (inst.predictions.size() == inst.candidates.size()) {
    const CandidatePrediction& pred = inst.predictions[i];
    out["predicted_class"] = schema.target_classes().at(static_cast<std::size_t>(pred.predicted_class));
    out["valid"] = pred.predicted_class == inst.tmpl.desired_class;
    if (pred.probabilities.empty()) {
      out["probabilities"] = nullptr;
    } else {
      json probs = json::object();
      for (std::size_t c = 0; c < pred.probabilities.size(); ++c) {
        probs[schema.target_classes()[c]] = pred.probabilities[c];
      }
      out["probabilities"] = std::move(probs);
    }
  } else {
    out["predicted_class"] = nullptr;
    out["probabilities"] = nullptr;
    out["valid"] = nullptr;
  }
  return out;
}

struct BatchRequest {
  Row instance;
  CounterfactualTemplate tmpl;
  std::size_t n = 0;
  std::optional<uint64_t> seed;
  std::optional<int> steps;
};

// Returns an error result, or nullopt with `out` filled.
std::optional<HttpResult> ParseBatchRequest(const Schema& schema, const std::string& hash,
                                            const std::string& body, bool optimize,
                                            BatchRequest& out) {
  json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return FieldError("body", "request body is not valid JSON");
  if (!j.is_object()) return FieldError("body", "request body must be a JSON object");
  static const std::vector<std::string> known = {"instance", "template", "n", "seed", "schema_hash",
                                                 "steps"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end() || (key == "steps" && !optimize)) {
      return FieldError(key, "unknown request field '" + key + "'");
    }
  }
  if (auto it = j.find("schema_hash"); it != j.end()) {
    if (!it->is_string()) return FieldError("schema_hash", "schema_hash must be a string");
    if (it->get<std::string>() != hash) {
      return Error(409, "schema hash mismatch: model has " + hash,
                   json::array({{{"field", "schema_hash"}, {"message", "expected " + hash}}}));
    }
  }
  auto n = j.find("n");
  if (n == j.end() || !n->is_number_integer()) return FieldError("n", "n must be an integer");
  if (n->get<int64_t>() < 1 || n->get<int64_t>() > static_cast<int64_t>(kMaxCandidates)) {
    return FieldError("n", "n must be between 1 and " + std::to_string(kMaxCandidates));
  }
  out.n = n->get<std::size_t>();
  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) {
    if (!it->is_number_unsigned()) return FieldError("seed", "seed must be a non-negative integer");
    out.seed = it->get<uint64_t>();
  }
  if (auto it = j.find("steps"); it != j.end()) {
    if (!it->is_number_integer() || it->get<int64_t>() < 1 || it->get<int64_t>() > kMaxSteps) {
      return FieldError("steps", "steps must be an integer between 1 and " + std::to_string(kMaxSteps));
    }
    out.steps = it->get<int>();
  }
  auto inst = j.find("instance");
  if (inst == j.end()) return FieldError("instance", "missing instance");
  auto tmpl = j.find("template");
  if (tmpl == j.end()) return FieldError("template", "missing template");
  try {
    out.instance = schema.RowFromJson(*inst);
    out.tmpl = TemplateFromJson(schema, *tmpl, out.instance);
  } catch (const SchemaError& e) {
    return FieldError(e.field(), e.what());
  }
  return std::nullopt;
}

}  // namespace

Service::Service(Registry registry, uint64_t server_seed)
    : registry_(std::move(registry)), server_rng_(server_seed) {}

Service::~Service() { Stop(); }

uint64_t Service::NextSeed() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return server_rng_.NextU64() >> 11;
}

std::shared_ptr<const Service::Loaded> Service::Load(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (auto it = cache_.find(id); it != cache_.end()) return it->second;
  const RegistryEntry& entry = registry_.Get(id);
  auto loaded = std::make_shared<Loaded>();
  loaded->kind = entry.kind;
  loaded->schema_hash = entry.schema_hash;
  auto load_critic = [&](const std::string& critic_id) {
    LoadedCritic c = LoadCritic(registry_.CheckpointPath(registry_.Get(critic_id)));
    loaded->critic = std::move(c.critic);
    loaded->reference = c.reference;
  };
  if (entry.kind == "fcegan") {
    LoadedFcegan f = LoadFcegan(registry_.CheckpointPath(entry));
    loaded->cdf = std::move(f.cdf);
    loaded->curve = {{"kind", "fcegan"}, {"best_epoch", f.model->best_epoch()},
                     {"epochs", FceganCurveToJson(f.model->curve())}};
    loaded->classifier = f.model->shared_classifier();
    if (!loaded->classifier) {
      // Black-box generators never hold the classifier; a linked one only verifies.
      if (auto it = entry.links.find("classifier"); it != entry.links.end()) {
        loaded->classifier = LoadClassifier(registry_.CheckpointPath(registry_.Get(it->second)));
      }
    }
    loaded->fcegan = std::move(f.model);
  } else if (entry.kind == "classifier") {
    LoadedClassifier c = LoadClassifierArchive(registry_.CheckpointPath(entry));
    loaded->cdf = std::move(c.cdf);
    loaded->curve = {{"kind", "classifier"}, {"best_epoch", c.model->best_epoch()},
                     {"epochs", CurveToJson(c.model->curve())}};
    loaded->classifier = std::move(c.model);
  } else {
    load_critic(entry.id);
    loaded->curve = {{"kind", "critic"}, {"epochs", loaded->critic->curve()}};
  }
  if (entry.kind != "critic") {
    if (auto it = entry.links.find("critic"); it != entry.links.end()) load_critic(it->second);
  }
  cache_[id] = loaded;
  return loaded;
}

HttpResult Service::ListModels() const {
  json models = json::array();
  for (const RegistryEntry& entry : registry_.entries()) models.push_back(EntrySummary(entry));
  return {200, {{"models", std::move(models)}}};
}

HttpResult Service::GetSchema(const std::string& id) const {
  const RegistryEntry& entry = registry_.Get(id);
  auto loaded = Load(id);
  const Schema* schema = nullptr;
  if (loaded->fcegan) {
    schema = &loaded->fcegan->schema();
  } else if (loaded->classifier) {
    schema = &loaded->classifier->schema();
  } else {
    schema = &loaded->critic->schema();
  }
  return {200, {{"model", id}, {"kind", entry.kind}, {"schema_hash", loaded->schema_hash},
                {"schema", schema->ToJson()}}};
}

HttpResult Service::GetCurve(const std::string& id) const {
  auto loaded = Load(id);
  json body = loaded->curve;
  body["model"] = id;
  body["schema_hash"] = loaded->schema_hash;
  return {200, std::move(body)};
}

HttpResult Service::Generate(const std::string& id, const std::string& body) const {
  return RunBatch(id, body, /*optimize=*/false);
}

HttpResult Service::Optimize(const std::string& id, const std::string& body) const {
  return RunBatch(id, body, /*optimize=*/true);
}

HttpResult Service::RunBatch(const std::string& id, const std::string& body, bool optimize) const {
  auto loaded = Load(id);
  if (!optimize && !loaded->fcegan) {
    return FieldError("model", "model '" + id + "' is a " + loaded->kind + ", not an fcegan");
  }
  if (optimize && !loaded->classifier) {
    return FieldError("model", "model '" + id + "' has no classifier to optimize against");
  }
  const Schema& schema = loaded->fcegan ? loaded->fcegan->schema() : loaded->classifier->schema();
  BatchRequest req;
  if (auto err = ParseBatchRequest(schema, loaded->schema_hash, body, optimize, req)) return *err;
  const uint64_t seed = req.seed ? *req.seed : NextSeed();

  InstanceCandidates result;
  {
    std::lock_guard<std::mutex> lock(loaded->inference);
    if (optimize) {
      OptimizerConfig config;
      if (req.steps) config.steps = *req.steps;
      OptimizationItem item{req.instance, req.tmpl};
      OptimizationResult r = OptimizeBatch(*loaded->classifier, loaded->critic.get(),
                                           std::span<const OptimizationItem>(&item, 1), req.n, config,
                                           seed);
      result = std::move(r.instances.front());
    } else {
      GenerationRequest request{req.instance, req.tmpl, std::nullopt};
      const ClassifierModel* verifier = loaded->classifier.get();
      if (verifier && !loaded->fcegan->classifier()) {
        request.predicted_class = verifier->PredictRows(std::span<const Row>(&req.instance, 1))
                                      .front()
                                      .predicted_class;
      }
      result = std::move(
          loaded->fcegan->Generate(std::span<const GenerationRequest>(&request, 1), req.n, seed)
              .front());
      if (verifier && result.predictions.empty()) result.predictions = verifier->PredictRows(result.candidates);
    }
  }

  EvaluationContext ctx{&schema, &*loaded->cdf, loaded->critic.get(), loaded->reference};
  MetricsReport metrics = Evaluate(ctx, std::span<const InstanceCandidates>(&result, 1));
  json candidates = json::array();
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    candidates.push_back(CandidateToJson(schema, result, i));
  }
  json out = {{"model", id},
              {"method", optimize ? "rgd" : "fcegan"},
              {"schema_hash", loaded->schema_hash},
              {"seed", seed},
              {"instance", schema.RowToJson(req.instance)},
              {"template", TemplateToJson(schema, req.tmpl)},
              {"candidates", std::move(candidates)},
              {"metrics", metrics.ToJson()}};
  return {200, std::move(out)};
}

HttpResult Service::Handle(const std::string& method, const std::string& path,
                           const std::string& body) const {
  static const std::regex model_route(R"(^/models/([A-Za-z0-9._-]+)/(schema|generate|optimize|curve)/?$)");
  try {
    if (path == "/models" || path == "/models/") {
      if (method != "GET") return Error(405, "method not allowed");
      return ListModels();
    }
    std::smatch m;
    if (!std::regex_match(path, m, model_route)) return Error(404, "no route for " + path);
    const std::string id = m[1];
    const std::string action = m[2];
    const bool post = action == "generate" || action == "optimize";
    if (method != (post ? "POST" : "GET")) return Error(405, "method not allowed");
    if (!registry_.Find(id)) return Error(404, "unknown model '" + id + "'");
    if (action == "schema") return GetSchema(id);
    if (action == "curve") return GetCurve(id);
    return action == "generate" ? Generate(id, body) : Optimize(id, body);
  } catch (const NotFoundError& e) {
    return Error(404, e.what());
  } catch (const SchemaError& e) {
    return FieldError(e.field(), e.what());
  } catch (const std::exception& e) {
    LogMessage(LogLevel::kError, std::string("request failed: ") + e.what());
    return Error(500, "internal error");
  }
}

void Service::Listen(const std::string& host, int port) {
  Configure();
  LogMessage(LogLevel::kInfo, "serving on " + host + ":" + std::to_string(port));
  if (!server_->listen(host, port)) throw UserError("cannot bind " + host + ":" + std::to_string(port));
}

int Service::BindToAnyPort(const std::string& host) {
  Configure();
  const int port = server_->bind_to_any_port(host);
  if (port < 0) throw UserError("cannot bind " + host);
  return port;
}

void Service::ListenAfterBind() { server_->listen_after_bind(); }

void Service::Stop() {
  if (server_) server_->stop();
}

void Service::Configure() {
  server_ = std::make_unique<httplib::Server>();
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
  auto respond = [this](const httplib::Request& req, httplib::Response& res) {
    HttpResult r = Handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server_->Get(".*", respond);
  server_->Post(".*", respond);
  server_->Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

}  // namespace flexcf
