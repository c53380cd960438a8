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

#ifndef FLEXCF_SERVICE_SERVICE_H_
#define FLEXCF_SERVICE_SERVICE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "flexcf/classifier/classifier.h"
#include "flexcf/common/rng.h"
#include "flexcf/data/ecdf.h"
#include "flexcf/gan/critic.h"
#include "flexcf/gan/fcegan.h"
#include "flexcf/io/registry.h"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace flexcf {

struct HttpResult {
  int status = 200;
  nlohmann::json body;
};

// JSON-over-HTTP front end of a model registry. Read-only over
// checkpoints; loaded models are cached and shared between requests.
//   GET  /models
//   GET  /models/{id}/schema
//   POST /models/{id}/generate  {instance, template, n, seed?, schema_hash?}
//   POST /models/{id}/optimize  {instance, template, n, seed?, schema_hash?, steps?}
//   GET  /models/{id}/curve
class Service {
 public:
  Service(Registry registry, uint64_t server_seed);
  ~Service();

  HttpResult ListModels() const;
  HttpResult GetSchema(const std::string& id) const;
  HttpResult Generate(const std::string& id, const std::string& body) const;
  HttpResult Optimize(const std::string& id, const std::string& body) const;
  HttpResult GetCurve(const std::string& id) const;
  // Routes method + path to the handlers above (404 for unknown routes).
  HttpResult Handle(const std::string& method, const std::string& path, const std::string& body) const;

  // Blocks until Stop().
  void Listen(const std::string& host, int port);
  // Binds to an ephemeral port and returns it; serve with ListenAfterBind.
  int BindToAnyPort(const std::string& host);
  void ListenAfterBind();
  void Stop();

 private:
  struct Loaded {
    std::string kind;
    std::string schema_hash;
    std::shared_ptr<const FceganModel> fcegan;
    std::shared_ptr<const ClassifierModel> classifier;
    std::shared_ptr<const FakenessCritic> critic;
    std::optional<FakenessReference> reference;
    std::optional<EmpiricalCdf> cdf;
    nlohmann::json curve;
    // Serializes inference on this model's modules.
    mutable std::mutex inference;
  };
  std::shared_ptr<const Loaded> Load(const std::string& id) const;
  uint64_t NextSeed() const;
  void Configure();
  HttpResult RunBatch(const std::string& id, const std::string& body, bool optimize) const;

  Registry registry_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const Loaded>> cache_;
  mutable Rng server_rng_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace flexcf

#endif  // FLEXCF_SERVICE_SERVICE_H_
