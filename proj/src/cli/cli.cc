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

#include "flexcf/cli/cli.h"

#include <torch/torch.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "flexcf/bench/bench.h"
#include "flexcf/bench/pipeline.h"
#include "flexcf/cf/template.h"
#include "flexcf/classifier/classifier.h"
#include "flexcf/common/config.h"
#include "flexcf/common/error.h"
#include "flexcf/common/log.h"
#include "flexcf/data/dataset.h"
#include "flexcf/data/ecdf.h"
#include "flexcf/data/encoder.h"
#include "flexcf/gan/critic.h"
#include "flexcf/gan/fcegan.h"
#include "flexcf/io/checkpoint.h"
#include "flexcf/io/registry.h"
#include "flexcf/metrics/metrics.h"
#include "flexcf/optim/rgd.h"
#include "flexcf/service/service.h"
#include "json.hpp"

#ifndef FLEXCF_COMMIT
#define FLEXCF_COMMIT "unknown"
#endif

namespace flexcf {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalOptions {
  uint64_t seed = 0;
  std::string config_path;
  std::vector<std::string> sets;
  std::string log_level = "info";
};

// Per-section configs after --config and --set.
struct ResolvedConfigs {
  ClassifierConfig classifier;
  FceganConfig fcegan;
  CriticConfig critic;
  OptimizerConfig rgd;
};

ResolvedConfigs ResolveConfigs(const GlobalOptions& g) {
  ConfigOverrides overrides;
  if (!g.config_path.empty()) overrides = LoadConfigFile(g.config_path);
  for (const std::string& s : g.sets) AddOverride(overrides, s);
  std::set<std::string> consumed;
  ResolvedConfigs r;
  r.classifier = ClassifierConfig::FromJson(ApplyOverrides(r.classifier.ToJson(), "classifier", overrides, &consumed));
  r.fcegan = FceganConfig::FromJson(ApplyOverrides(r.fcegan.ToJson(), "fcegan", overrides, &consumed));
  r.critic = CriticConfig::FromJson(ApplyOverrides(r.critic.ToJson(), "critic", overrides, &consumed));
  r.rgd = OptimizerConfig::FromJson(ApplyOverrides(r.rgd.ToJson(), "rgd", overrides, &consumed));
  RequireConsumed(overrides, consumed);
  return r;
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UserError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void WriteTextFile(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write '" + path + "'");
  out << text;
  if (!out) throw UserError("cannot write '" + path + "'");
}

std::string CsvCell(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

// Data options shared by commands that train on a CSV.
struct DataOptions {
  std::string data;
  std::string schema;
  std::string target;
  std::size_t max_rows = 0;
  uint64_t split_seed = 0;

  void Add(CLI::App* app, bool required) {
    auto* opt = app->add_option("--data", data, "training CSV (comma-delimited, header row)");
    if (required) opt->required();
    app->add_option("--schema", schema, "schema JSON; inferred from the CSV when absent");
    app->add_option("--target", target, "target column (default: schema target or last column)");
    app->add_option("--max-rows", max_rows, "seeded subsample size; 0 keeps every row");
    app->add_option("--split-seed", split_seed, "seed of the 60/20/20 split");
  }

  SplitDataset Load() const {
    std::optional<Schema> schema_file;
    if (!schema.empty()) schema_file = Schema::LoadJsonFile(schema);
    CsvOptions options;
    options.target = target;
    CsvLoadResult loaded = LoadCsv(data, schema_file ? &*schema_file : nullptr, options);
    if (loaded.dropped_rows > 0) {
      FLEXCF_LOG(kInfo) << "dropped " << loaded.dropped_rows << " rows with missing cells";
    }
    Dataset ds = loaded.dataset;
    if (max_rows > 0) ds = Subsample(ds, max_rows, split_seed);
    return Split(ds, split_seed);
  }
};

// Where a trained model goes: a file, a registry entry, or both.
struct OutputOptions {
  std::string out;
  std::string registry;
  std::string id;
  std::vector<std::string> links;

  void Add(CLI::App* app) {
    app->add_option("--out", out, "checkpoint path");
    app->add_option("--registry", registry, "registry directory (default: $FLEXCF_REGISTRY when --id is set)");
    app->add_option("--id", id, "registry id");
    app->add_option("--link", links, "registry link role=id (e.g. critic=adult-critic)");
  }

  std::string Path() const {
    if (!out.empty()) return out;
    if (id.empty()) throw UserError("either --out or --id is required");
    Registry reg = Registry::Open(ResolveRegistryDir(registry.empty() ? std::nullopt : std::optional(registry)));
    return (fs::path(reg.dir()) / (id + ".ckpt")).string();
  }

  void Register(const std::string& kind, const std::string& path, const std::string& schema_hash,
                const json& config, std::map<std::string, std::string> extra_links = {}) const {
    if (id.empty()) return;
    Registry reg = Registry::Open(ResolveRegistryDir(registry.empty() ? std::nullopt : std::optional(registry)));
    RegistryEntry entry;
    entry.id = id;
    entry.kind = kind;
    entry.schema_hash = schema_hash;
    entry.config = config;
    const fs::path rel = fs::path(path).lexically_relative(reg.dir());
    entry.checkpoint = (!rel.empty() && *rel.begin() != "..") ? rel.string() : fs::absolute(path).string();
    entry.links = std::move(extra_links);
    for (const std::string& l : links) {
      const auto eq = l.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == l.size()) {
        throw UserError("--link expects role=id, got '" + l + "'");
      }
      entry.links[l.substr(0, eq)] = l.substr(eq + 1);
    }
    reg.Add(std::move(entry));
  }
};

std::string SidecarSchemaPath(const std::string& history) { return history + ".schema.json"; }

// Instances from a CSV; the target column is optional.
std::vector<Row> LoadInstances(const std::string& path, const Schema& schema) {
  CsvOptions options;
  options.allow_missing_target = true;
  CsvLoadResult loaded = LoadCsv(path, &schema, options);
  if (loaded.dataset.rows.empty()) throw UserError("no usable rows in '" + path + "'");
  return loaded.dataset.rows;
}

std::string CandidatesCsv(const Schema& schema, std::span<const InstanceCandidates> batch) {
  std::ostringstream out;
  out << "instance,candidate";
  for (const Column& col : schema.columns()) out << "," << CsvCell(col.name);
  out << ",predicted_class,valid\n";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const InstanceCandidates& inst = batch[i];
    const bool verified = inst.predictions.size() == inst.candidates.size();
    for (std::size_t k = 0; k < inst.candidates.size(); ++k) {
      out << i << "," << k;
      for (std::size_t j = 0; j < schema.num_features(); ++j) {
        out << "," << CsvCell(schema.FormatValue(j, inst.candidates[k][j]));
      }
      if (verified) {
        const int cls = inst.predictions[k].predicted_class;
        out << "," << CsvCell(schema.target_classes().at(static_cast<std::size_t>(cls))) << ","
            << (cls == inst.tmpl.desired_class ? "true" : "false") << "\n";
      } else {
        out << ",,\n";
      }
    }
  }
  return out.str();
}

// Reads a candidates CSV written by generate/optimize back into batches.
std::vector<InstanceCandidates> ReadCandidatesCsv(const std::string& path, const Schema& schema,
                                                  std::span<const Row> instances,
                                                  const json& template_json) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw UserError("'" + path + "' is empty");
  const auto header = SplitCsvLine(line);
  if (header.size() < 2 + schema.num_features() || header[0] != "instance" || header[1] != "candidate") {
    throw UserError("'" + path + "' is not a candidates file");
  }
  std::vector<InstanceCandidates> batch(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    batch[i].original = instances[i];
    batch[i].tmpl = TemplateFromJson(schema, template_json, instances[i]);
  }
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = SplitCsvLine(line);
    if (cells.size() != header.size()) throw IngestError("wrong cell count", row_index);
    const std::size_t i = std::stoul(cells[0]);
    if (i >= batch.size()) throw IngestError("instance index out of range", row_index);
    Row cand(schema.num_features());
    for (std::size_t j = 0; j < schema.num_features(); ++j) cand[j] = schema.ParseValue(j, cells[2 + j]);
    batch[i].candidates.push_back(std::move(cand));
    ++row_index;
  }
  return batch;
}

void WriteBatchOutputs(const std::string& dir, const Schema& schema, std::span<const InstanceCandidates> batch,
                       const MetricsReport& metrics, std::ostream& out) {
  WriteTextFile((fs::path(dir) / "counterfactuals.csv").string(), CandidatesCsv(schema, batch));
  WriteTextFile((fs::path(dir) / "metrics.json").string(), metrics.ToJson().dump(2) + "\n");
  out << "wrote " << (fs::path(dir) / "counterfactuals.csv").string() << " and "
      << (fs::path(dir) / "metrics.json").string() << "\n";
}

std::vector<double> ParseDoubleList(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = ParseDouble(item);
    if (!v) throw UserError(std::string(flag) + ": '" + item + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::string> ParseList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  torch::set_num_threads(1);
  CLI::App app{"flexcf: flexible counterfactual explanations for tabular classifiers", "flexcf"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--seed", g.seed, "global seed")->capture_default_str();
  app.add_option("--config", g.config_path, "key=value config file (section.key = value)");
  app.add_option("--set", g.sets, "config override section.key=value (repeatable)");
  app.add_option("--log-level", g.log_level, "debug|info|warning|error|silent")
      ->check(CLI::IsMember({"debug", "info", "warning", "error", "silent"}));
  app.fallthrough();

  std::function<void()> action;

  // train-classifier
  DataOptions clf_data;
  OutputOptions clf_out;
  std::optional<int> clf_epochs;
  auto* train_clf = app.add_subcommand("train-classifier", "train the MLP classifier");
  clf_data.Add(train_clf, true);
  clf_out.Add(train_clf);
  train_clf->add_option("--epochs", clf_epochs, "max epochs");
  train_clf->callback([&] {
    action = [&] {
      ResolvedConfigs cfg = ResolveConfigs(g);
      if (clf_epochs) cfg.classifier.max_epochs = *clf_epochs;
      const std::string path = clf_out.Path();
      SplitDataset split = clf_data.Load();
      auto encoder = std::make_shared<const Encoder>(Encoder::Fit(split.train.schema, split.train.rows));
      ClassifierModel model = TrainClassifier(split, encoder, cfg.classifier, g.seed);
      SaveClassifier(path, model, EmpiricalCdf::Fit(split.train.schema, split.train.rows));
      clf_out.Register("classifier", path, split.train.schema.Hash(), cfg.classifier.ToJson());
      json summary = {{"checkpoint", path},
                      {"schema_hash", split.train.schema.Hash()},
                      {"best_epoch", model.best_epoch()},
                      {"validation_accuracy", model.Accuracy(split.validation)},
                      {"test_accuracy", model.Accuracy(split.test)}};
      out << summary.dump(2) << "\n";
    };
  });

  // export-history
  std::string hist_classifier, hist_data, hist_out;
  auto* export_hist = app.add_subcommand("export-history", "record classifier predictions for black-box training");
  export_hist->add_option("--classifier", hist_classifier, "classifier checkpoint")->required();
  export_hist->add_option("--data", hist_data, "rows to label (CSV)")->required();
  export_hist->add_option("--out", hist_out, "history CSV")->required();
  export_hist->callback([&] {
    action = [&] {
      auto model = LoadClassifier(hist_classifier);
      std::vector<Row> rows = LoadInstances(hist_data, model->schema());
      WriteHistoryCsv(hist_out, ExportHistory(*model, rows));
      model->schema().SaveJsonFile(SidecarSchemaPath(hist_out));
      out << "wrote " << rows.size() << " records to " << hist_out << "\n";
    };
  });

  // train-fcegan
  std::string fc_mode = "classifier", fc_classifier, fc_history, fc_oracle;
  DataOptions fc_data;
  OutputOptions fc_out;
  bool fc_no_template = false;
  std::optional<double> fc_lambda_m;
  std::optional<int> fc_epochs;
  auto* train_fc = app.add_subcommand("train-fcegan", "train a counterfactual generator");
  train_fc->add_option("--mode", fc_mode, "classifier|black-box")->check(CLI::IsMember({"classifier", "black-box"}));
  train_fc->add_option("--classifier", fc_classifier, "classifier checkpoint (classifier mode)");
  train_fc->add_option("--history", fc_history, "prediction history CSV (black-box mode)");
  train_fc->add_option("--validation-oracle", fc_oracle,
                       "black-box: classifier checkpoint labelling validation candidates for early stopping");
  fc_data.Add(train_fc, false);
  fc_out.Add(train_fc);
  train_fc->add_flag("--no-template", fc_no_template, "train without template knowledge");
  train_fc->add_option("--lambda-m", fc_lambda_m, "divergence weight on mutable features");
  train_fc->add_option("--epochs", fc_epochs, "max epochs");
  train_fc->callback([&] {
    action = [&] {
      ResolvedConfigs cfg = ResolveConfigs(g);
      FceganConfig c = cfg.fcegan;
      c.mode = ParseFceganMode(fc_mode);
      if (c.mode == FceganMode::kBlackBox) c.lambda_clas = 0.0;
      c.template_aware = !fc_no_template;
      if (fc_lambda_m) c.lambda_m = *fc_lambda_m;
      if (fc_epochs) c.max_epochs = *fc_epochs;
      if (c.mode == FceganMode::kBlackBox) {
        if (fc_history.empty()) throw UserError("black-box mode requires --history (prediction history CSV)");
        if (!fc_classifier.empty()) throw UserError("black-box mode does not accept --classifier");
        const std::string schema_path = fc_data.schema.empty() ? SidecarSchemaPath(fc_history) : fc_data.schema;
        if (!fs::exists(schema_path)) throw UserError("black-box mode requires --schema (no " + schema_path + ")");
        const Schema schema = Schema::LoadJsonFile(schema_path);
        PredictionHistory history = LoadHistoryCsv(fc_history, schema);
        std::vector<Row> rows;
        for (const auto& r : history.records) rows.push_back(r.instance);
        auto encoder = std::make_shared<const Encoder>(Encoder::Fit(schema, rows));
        std::optional<BlackBoxValidation> validation;
        std::shared_ptr<ClassifierModel> oracle_model;
        std::optional<ClassifierOracle> oracle;
        if (!fc_oracle.empty()) {
          if (fc_data.data.empty()) throw UserError("--validation-oracle requires --data for validation rows");
          oracle_model = LoadClassifier(fc_oracle);
          oracle.emplace(*oracle_model);
          validation = BlackBoxValidation{LoadInstances(fc_data.data, schema), &*oracle};
        }
        const std::string path = fc_out.Path();
        FceganModel model = TrainFceganBlackBox(history, encoder, c, g.seed, validation ? &*validation : nullptr);
        SaveFcegan(path, model, EmpiricalCdf::Fit(schema, rows));
        fc_out.Register("fcegan", path, schema.Hash(), c.ToJson());
        out << json({{"checkpoint", path}, {"schema_hash", schema.Hash()}, {"best_epoch", model.best_epoch()}})
                   .dump(2)
            << "\n";
        return;
      }
      if (fc_classifier.empty()) throw UserError("classifier mode requires --classifier");
      if (fc_data.data.empty()) throw UserError("classifier mode requires --data");
      LoadedClassifier clf = LoadClassifierArchive(fc_classifier);
      SplitDataset split = fc_data.Load();
      if (!(split.train.schema == clf.model->schema())) {
        throw SchemaError("--data does not match the classifier's schema");
      }
      const std::string path = fc_out.Path();
      FceganModel model = TrainFcegan(split, clf.model, c, g.seed);
      SaveFcegan(path, model, clf.cdf);
      fc_out.Register("fcegan", path, split.train.schema.Hash(), c.ToJson());
      out << json({{"checkpoint", path},
                   {"schema_hash", split.train.schema.Hash()},
                   {"best_epoch", model.best_epoch()}})
                 .dump(2)
          << "\n";
    };
  });

  // train-critic
  DataOptions cr_data;
  OutputOptions cr_out;
  std::optional<int> cr_epochs;
  auto* train_cr = app.add_subcommand("train-critic", "train the fakeness critic");
  cr_data.Add(train_cr, true);
  cr_out.Add(train_cr);
  train_cr->add_option("--epochs", cr_epochs, "max epochs");
  train_cr->callback([&] {
    action = [&] {
      ResolvedConfigs cfg = ResolveConfigs(g);
      if (cr_epochs) cfg.critic.max_epochs = *cr_epochs;
      const std::string path = cr_out.Path();
      SplitDataset split = cr_data.Load();
      auto encoder = std::make_shared<const Encoder>(Encoder::Fit(split.train.schema, split.train.rows));
      FakenessCritic critic = TrainCritic(split.train.rows, encoder, cfg.critic, g.seed);
      const FakenessReference ref = ComputeFakenessReference(critic, split.test.rows);
      SaveCritic(path, critic, ref);
      cr_out.Register("critic", path, split.train.schema.Hash(), cfg.critic.ToJson());
      out << json({{"checkpoint", path},
                   {"schema_hash", split.train.schema.Hash()},
                   {"reference", {{"mean", ref.mean}, {"std", ref.std}, {"count", ref.count}}}})
                 .dump(2)
          << "\n";
    };
  });

  // generate / optimize share their inputs.
  std::string gen_model, gen_input, gen_template, gen_out = ".", gen_critic, gen_classifier;
  std::size_t gen_n = 5;
  auto* generate = app.add_subcommand("generate", "generate counterfactuals with a trained fcegan");
  generate->add_option("--model", gen_model, "fcegan checkpoint")->required();
  generate->add_option("--input", gen_input, "instances CSV")->required();
  generate->add_option("--template", gen_template, "template JSON {\"mutable\": [...], \"desired_class\": ...}")
      ->required();
  generate->add_option("--n", gen_n, "candidates per instance")->check(CLI::Range(1, 100000));
  generate->add_option("--out", gen_out, "output directory");
  generate->add_option("--critic", gen_critic, "critic checkpoint for the fakeness measure");
  generate->add_option("--classifier", gen_classifier, "classifier verifying black-box candidates");
  generate->callback([&] {
    action = [&] {
      LoadedFcegan f = LoadFcegan(gen_model);
      const Schema& schema = f.model->schema();
      const json tmpl = ReadJsonFile(gen_template);
      std::vector<Row> rows = LoadInstances(gen_input, schema);
      std::shared_ptr<const ClassifierModel> verifier = f.model->shared_classifier();
      if (!verifier && !gen_classifier.empty()) verifier = LoadClassifier(gen_classifier);
      std::vector<GenerationRequest> requests;
      for (const Row& r : rows) {
        GenerationRequest req{r, TemplateFromJson(schema, tmpl, r), std::nullopt};
        if (verifier && !f.model->classifier()) {
          req.predicted_class = verifier->PredictRows(std::span<const Row>(&r, 1)).front().predicted_class;
        }
        requests.push_back(std::move(req));
      }
      std::vector<InstanceCandidates> batch = f.model->Generate(requests, gen_n, g.seed);
      for (auto& inst : batch) {
        if (verifier && inst.predictions.empty()) inst.predictions = verifier->PredictRows(inst.candidates);
      }
      std::optional<LoadedCritic> critic;
      if (!gen_critic.empty()) critic = LoadCritic(gen_critic);
      EvaluationContext ctx{&schema, &f.cdf, critic ? critic->critic.get() : nullptr,
                            critic ? std::optional(critic->reference) : std::nullopt};
      WriteBatchOutputs(gen_out, schema, batch, Evaluate(ctx, batch), out);
    };
  });

  std::string opt_classifier, opt_input, opt_template, opt_out = ".", opt_critic;
  std::size_t opt_n = 5;
  std::optional<int> opt_steps;
  bool opt_default = false;
  auto* optimize = app.add_subcommand("optimize", "counterfactuals by regularized gradient descent");
  optimize->add_option("--model,--classifier", opt_classifier, "classifier checkpoint")->required();
  optimize->add_option("--input", opt_input, "instances CSV")->required();
  optimize->add_option("--template", opt_template, "template JSON")->required();
  optimize->add_option("--n", opt_n, "candidates per instance")->check(CLI::Range(1, 100000));
  optimize->add_option("--steps", opt_steps, "gradient steps");
  optimize->add_option("--critic", opt_critic, "critic checkpoint (realism term and fakeness measure)");
  optimize->add_flag("--default", opt_default, "unguided variant: immutable features are reset only at the end");
  optimize->add_option("--out", opt_out, "output directory");
  optimize->callback([&] {
    action = [&] {
      ResolvedConfigs cfg = ResolveConfigs(g);
      OptimizerConfig c = cfg.rgd;
      if (opt_steps) c.steps = *opt_steps;
      c.template_guided = !opt_default;
      LoadedClassifier clf = LoadClassifierArchive(opt_classifier);
      const Schema& schema = clf.model->schema();
      std::optional<LoadedCritic> critic;
      if (!opt_critic.empty()) critic = LoadCritic(opt_critic);
      const json tmpl = ReadJsonFile(opt_template);
      std::vector<OptimizationItem> items;
      for (const Row& r : LoadInstances(opt_input, schema)) items.push_back({r, TemplateFromJson(schema, tmpl, r)});
      std::shared_ptr<const FakenessCritic> critic_ptr = critic ? critic->critic : nullptr;
      RgdMethod method("rgd", clf.model, critic_ptr, c);
      std::vector<CounterfactualQuery> queries;
      for (const auto& it : items) queries.push_back({it.original, it.tmpl, std::nullopt});
      std::vector<InstanceCandidates> batch = method.Run(queries, opt_n, g.seed);
      for (auto& inst : batch) inst.predictions = clf.model->PredictRows(inst.candidates);
      EvaluationContext ctx{&schema, &clf.cdf, critic_ptr.get(),
                            critic ? std::optional(critic->reference) : std::nullopt};
      WriteBatchOutputs(opt_out, schema, batch, Evaluate(ctx, batch), out);
    };
  });

  // evaluate
  std::string ev_classifier, ev_candidates, ev_input, ev_template, ev_critic, ev_out;
  auto* evaluate = app.add_subcommand("evaluate", "score a candidates CSV");
  evaluate->add_option("--classifier", ev_classifier, "classifier checkpoint (predictions and ECDF)")->required();
  evaluate->add_option("--candidates", ev_candidates, "counterfactuals CSV from generate/optimize")->required();
  evaluate->add_option("--input", ev_input, "instances CSV the candidates came from")->required();
  evaluate->add_option("--template", ev_template, "template JSON")->required();
  evaluate->add_option("--critic", ev_critic, "critic checkpoint for the fakeness measure");
  evaluate->add_option("--out", ev_out, "metrics JSON path (default: stdout)");
  evaluate->callback([&] {
    action = [&] {
      LoadedClassifier clf = LoadClassifierArchive(ev_classifier);
      const Schema& schema = clf.model->schema();
      std::vector<Row> rows = LoadInstances(ev_input, schema);
      std::vector<InstanceCandidates> batch = ReadCandidatesCsv(ev_candidates, schema, rows, ReadJsonFile(ev_template));
      for (auto& inst : batch) inst.predictions = clf.model->PredictRows(inst.candidates);
      std::optional<LoadedCritic> critic;
      if (!ev_critic.empty()) critic = LoadCritic(ev_critic);
      EvaluationContext ctx{&schema, &clf.cdf, critic ? critic->critic.get() : nullptr,
                            critic ? std::optional(critic->reference) : std::nullopt};
      const std::string text = Evaluate(ctx, batch).ToJson().dump(2) + "\n";
      if (ev_out.empty()) {
        out << text;
      } else {
        WriteTextFile(ev_out, text);
      }
    };
  });

  // bench
  std::string b_data, b_target, b_methods, b_grid, b_out = "bench_out", b_study, b_normalize;
  std::size_t b_max_rows = 20000, b_cap = 500, b_n = 5, b_seeds = 5;
  std::optional<int> b_epochs, b_clf_epochs, b_critic_epochs;
  auto* bench = app.add_subcommand("bench", "flexibility sweep over methods and seeds");
  bench->add_option("--data", b_data, "dataset CSV (default: synthetic separable)");
  bench->add_option("--target", b_target, "target column");
  bench->add_option("--max-rows", b_max_rows, "subsample size")->capture_default_str();
  bench->add_option("--methods", b_methods, "comma list; default: all");
  bench->add_option("--grid", b_grid, "comma list of mutable fractions");
  bench->add_option("--seeds", b_seeds, "number of seeds, starting at --seed")->check(CLI::Range(1, 1000));
  bench->add_option("--cap", b_cap, "max test instances")->check(CLI::Range(1, 1000000));
  bench->add_option("--n", b_n, "candidates per instance")->check(CLI::Range(1, 100000));
  bench->add_option("--out", b_out, "output directory");
  bench->add_option("--epochs", b_epochs, "fcegan max epochs");
  bench->add_option("--classifier-epochs", b_clf_epochs, "classifier max epochs");
  bench->add_option("--critic-epochs", b_critic_epochs, "critic max epochs");
  bench->add_option("--divergence-study", b_study, "classifier|black-box: sweep the divergence-constraint levels")
      ->check(CLI::IsMember({"classifier", "black-box"}));
  bench->add_option("--normalize-against", b_normalize, "method whose AUCs normalize the others");
  bench->callback([&] {
    action = [&] {
      ResolvedConfigs cfg = ResolveConfigs(g);
      PipelineConfig pc;
      pc.data_path = b_data;
      pc.target = b_target;
      pc.max_rows = b_max_rows;
      pc.split_seed = g.seed;
      pc.base_seed = g.seed;
      pc.classifier = cfg.classifier;
      pc.critic = cfg.critic;
      pc.fcegan = cfg.fcegan;
      pc.rgd = cfg.rgd;
      if (b_epochs) pc.fcegan.max_epochs = *b_epochs;
      if (b_clf_epochs) pc.classifier.max_epochs = *b_clf_epochs;
      if (b_critic_epochs) pc.critic.max_epochs = *b_critic_epochs;
      if (!b_grid.empty()) pc.sweep.grid = ParseDoubleList(b_grid, "--grid");
      pc.sweep.seeds.clear();
      for (std::size_t s = 0; s < b_seeds; ++s) pc.sweep.seeds.push_back(g.seed + s);
      pc.sweep.cap = b_cap;
      pc.sweep.n_per_instance = b_n;
      std::vector<std::string> methods = b_methods.empty() ? KnownMethods() : ParseList(b_methods);
      for (const std::string& m : methods) {
        const auto& known = KnownMethods();
        if (std::find(known.begin(), known.end(), m) == known.end()) throw UserError("unknown method '" + m + "'");
      }
      BenchPipeline pipeline(pc, LoadPipelineData(pc));
      std::vector<SweepResult> results;
      for (const std::string& m : methods) results.push_back(pipeline.Run(m));
      if (!b_study.empty()) {
        for (auto& r : pipeline.RunDivergenceStudy(ParseFceganMode(b_study))) results.push_back(std::move(r));
      }
      Provenance prov;
      prov.commit = FLEXCF_COMMIT;
      prov.dataset = b_data.empty() ? "synthetic" : b_data;
      prov.configs = pc.ToJson();
      WriteSweepResults(b_out, results, prov);
      if (!b_normalize.empty()) {
        auto ref = std::find_if(results.begin(), results.end(),
                                [&](const SweepResult& r) { return r.method == b_normalize; });
        if (ref == results.end()) throw UserError("--normalize-against: '" + b_normalize + "' was not run");
        json normalized = json::array();
        for (const auto& r : results) normalized.push_back(NormalizeAgainst(r, *ref).ToJson());
        WriteTextFile((fs::path(b_out) / "normalized.json").string(), normalized.dump(2) + "\n");
      }
      for (const auto& r : results) {
        const auto& auc = r.auc_mean.at("valid_fraction");
        out << r.method << " valid_fraction auc " << (auc ? FormatDouble(*auc) : std::string("n/a")) << "\n";
      }
      out << "wrote " << (fs::path(b_out) / "aggregate.csv").string() << "\n";
    };
  });

  // serve
  std::string sv_registry, sv_host = "127.0.0.1";
  int sv_port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP generation service over a registry");
  serve->add_option("--registry", sv_registry, "registry directory (default: $FLEXCF_REGISTRY)");
  serve->add_option("--host", sv_host, "bind address")->capture_default_str();
  serve->add_option("--port", sv_port, "port")->capture_default_str()->check(CLI::Range(0, 65535));
  serve->callback([&] {
    action = [&] {
      Registry reg = Registry::Open(ResolveRegistryDir(sv_registry.empty() ? std::nullopt : std::optional(sv_registry)));
      bool has_generator = false;
      for (const auto& e : reg.entries()) has_generator = has_generator || e.kind == "fcegan";
      if (!has_generator) throw UserError("registry '" + reg.dir() + "' has no fcegan entry");
      Service service(std::move(reg), g.seed);
      service.Listen(sv_host, sv_port);
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* sub = nullptr;
    for (const CLI::App* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return kExitUserError;
  }

  static const std::map<std::string, LogLevel> levels = {{"debug", LogLevel::kDebug},
                                                         {"info", LogLevel::kInfo},
                                                         {"warning", LogLevel::kWarning},
                                                         {"error", LogLevel::kError},
                                                         {"silent", LogLevel::kSilent}};
  SetLogLevel(levels.at(g.log_level));
  try {
    action();
  } catch (const UserError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
  return kExitOk;
}

}  // namespace flexcf
