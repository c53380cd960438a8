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

#include "flexcf/bench/bench.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "flexcf/common/error.h"
#include "flexcf/common/log.h"
#include "flexcf/common/rng.h"

namespace flexcf {

const std::vector<std::string>& KnownMethods() {
  static const std::vector<std::string> methods = {kMethodFceganClassifier, kMethodFceganBlackBox,
                                                   kMethodFceganNoTemplate, kMethodRgdTemplate,
                                                   kMethodRgdDefault,       kMethodRandomInput};
  return methods;
}

std::vector<InstanceCandidates> FceganMethod::Run(std::span<const CounterfactualQuery> queries,
                                                  std::size_t n, uint64_t seed) const {
  std::vector<GenerationRequest> requests;
  requests.reserve(queries.size());
  for (const auto& q : queries) requests.push_back({q.instance, q.tmpl, q.predicted_class});
  return model_->Generate(requests, n, seed);
}

std::vector<InstanceCandidates> RgdMethod::Run(std::span<const CounterfactualQuery> queries, std::size_t n,
                                               uint64_t seed) const {
  std::vector<OptimizationItem> items;
  items.reserve(queries.size());
  for (const auto& q : queries) items.push_back({q.instance, q.tmpl});
  auto result = OptimizeBatch(*classifier_, critic_.get(), items, n, config_, seed);
  if (!config_.template_guided) {
    for (auto& inst : result.instances) {
      for (auto& cand : inst.candidates) cand = ResetImmutableRaw(cand, inst.tmpl);
    }
  }
  return std::move(result.instances);
}

std::vector<InstanceCandidates> RandomInputMethod::Run(std::span<const CounterfactualQuery> queries,
                                                       std::size_t n, uint64_t seed) const {
  if (train_rows_.empty()) throw UserError("random_input needs training rows");
  Rng rng(Rng::Combine(seed, 0x4a11d));
  std::vector<InstanceCandidates> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    InstanceCandidates inst{q.instance, q.tmpl, {}, {}};
    for (std::size_t s = 0; s < n; ++s) {
      Row cand = q.instance;
      for (std::size_t j = 0; j < cand.size(); ++j) {
        if (q.tmpl.mutable_mask[j]) cand[j] = train_rows_[rng.UniformInt(train_rows_.size())][j];
      }
      inst.candidates.push_back(std::move(cand));
    }
    out.push_back(std::move(inst));
  }
  return out;
}

void SweepOptions::Validate() const {
  if (grid.empty()) throw ConfigError("bench grid must not be empty");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g] < 0.0 || grid[g] > 1.0) throw ConfigError("bench grid values must lie in [0, 1]");
    if (g > 0 && grid[g] <= grid[g - 1]) throw ConfigError("bench grid must be strictly ascending");
  }
  if (seeds.empty()) throw ConfigError("bench needs at least one seed");
  if (n_per_instance == 0 || cap == 0) throw ConfigError("bench n and cap must be positive");
}

nlohmann::json SweepOptions::ToJson() const {
  return {{"grid", grid}, {"seeds", seeds}, {"n_per_instance", n_per_instance}, {"cap", cap},
          {"desired_class", desired_class ? nlohmann::json(*desired_class) : nlohmann::json(nullptr)}};
}

std::vector<Row> SelectInstances(const ClassifierModel& classifier, std::span<const Row> rows, int desired,
                                 std::size_t cap) {
  std::vector<Row> out;
  const std::vector<int> predicted = classifier.PredictClasses(rows);
  for (std::size_t i = 0; i < rows.size() && out.size() < cap; ++i) {
    if (predicted[i] != desired) out.push_back(rows[i]);
  }
  return out;
}

CounterfactualTemplate SweepTemplate(const Schema& schema, const Row& instance, double fraction, int desired,
                                     uint64_t seed, std::size_t level_index, std::size_t instance_index) {
  Rng rng(Rng::Combine(Rng::Combine(seed, 0x5eeb + level_index), instance_index));
  return SampleTemplateWithFraction(schema, instance, fraction, desired, rng);
}

std::optional<double> TrapezoidAuc(std::span<const double> grid, std::span<const std::optional<double>> values) {
  if (grid.size() != values.size() || grid.empty()) return std::nullopt;
  for (const auto& v : values) {
    if (!v) return std::nullopt;
  }
  double area = 0.0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    area += 0.5 * (*values[g] + *values[g - 1]) * (grid[g] - grid[g - 1]);
  }
  return area;
}

double StandardError(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return sd / std::sqrt(static_cast<double>(values.size()));
}

namespace {

std::optional<double> MeanOf(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v) return std::nullopt;
    sum += *v;
  }
  if (values.empty()) return std::nullopt;
  return sum / static_cast<double>(values.size());
}

std::optional<double> SemOf(const std::vector<std::optional<double>>& values) {
  std::vector<double> present;
  for (const auto& v : values) {
    if (!v) return std::nullopt;
    present.push_back(*v);
  }
  if (present.empty()) return std::nullopt;
  return StandardError(present);
}

nlohmann::json Opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json OptMap(const std::map<std::string, std::optional<double>>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[k] = Opt(v);
  return j;
}

}  // namespace

void FinalizeAggregates(SweepResult& result) {
  result.auc.clear();
  result.auc_mean.clear();
  result.auc_sem.clear();
  for (const std::string& metric : MetricNames()) {
    std::vector<std::optional<double>> per_seed;
    for (const auto& seed_reports : result.reports) {
      std::vector<std::optional<double>> curve;
      for (const auto& report : seed_reports) curve.push_back(report.Get(metric));
      per_seed.push_back(TrapezoidAuc(result.grid, curve));
    }
    result.auc[metric] = per_seed;
    result.auc_mean[metric] = MeanOf(per_seed);
    result.auc_sem[metric] = SemOf(per_seed);
  }
}

std::optional<double> SweepResult::LevelMean(const std::string& metric, std::size_t g) const {
  std::vector<std::optional<double>> values;
  for (const auto& seed_reports : reports) values.push_back(seed_reports.at(g).Get(metric));
  return MeanOf(values);
}

nlohmann::json SweepResult::ToJson() const {
  nlohmann::json j;
  j["method"] = method;
  j["grid"] = grid;
  j["seeds"] = seeds;
  nlohmann::json per_seed = nlohmann::json::array();
  for (std::size_t s = 0; s < reports.size(); ++s) {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& r : reports[s]) levels.push_back(r.ToJson());
    per_seed.push_back({{"seed", seeds.at(s)}, {"levels", levels}});
  }
  j["reports"] = per_seed;
  nlohmann::json auc_j = nlohmann::json::object();
  for (const auto& [metric, values] : auc) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : values) arr.push_back(Opt(v));
    auc_j[metric] = arr;
  }
  j["auc"] = auc_j;
  j["auc_mean"] = OptMap(auc_mean);
  j["auc_sem"] = OptMap(auc_sem);
  j["normalized_against"] = normalized_against ? nlohmann::json(*normalized_against) : nlohmann::json(nullptr);
  return j;
}

SweepResult RunFlexibilitySweep(const std::string& method_id, const MethodProvider& provider,
                                const SweepEnvironment& env, const SweepOptions& options) {
  options.Validate();
  if (!env.classifier || !env.cdf) throw UserError("sweeps need a classifier and an ECDF");
  if (env.instances.empty()) throw UserError("no evaluation instances (none predicted as undesired?)");
  const Schema& schema = env.classifier->schema();
  const int desired = options.desired_class.value_or(static_cast<int>(schema.num_classes()) - 1);
  const std::vector<int> predicted = env.classifier->PredictClasses(env.instances);
  EvaluationContext context{&schema, env.cdf, env.fakeness, env.fakeness_reference};

  SweepResult result;
  result.method = method_id;
  result.grid = options.grid;
  result.seeds = options.seeds;
  for (uint64_t seed : options.seeds) {
    auto method = provider(seed);
    if (!method) throw UserError("method '" + method_id + "' is not available (untrained?)");
    std::vector<MetricsReport> levels;
    for (std::size_t g = 0; g < options.grid.size(); ++g) {
      std::vector<CounterfactualQuery> queries;
      queries.reserve(env.instances.size());
      for (std::size_t i = 0; i < env.instances.size(); ++i) {
        queries.push_back({env.instances[i],
                           SweepTemplate(schema, env.instances[i], options.grid[g], desired, seed, g, i),
                           predicted[i]});
      }
      auto batch = method->Run(queries, options.n_per_instance, Rng::Combine(seed, 0x6e0 + g));
      for (auto& inst : batch) inst.predictions = env.classifier->PredictRows(inst.candidates);
      levels.push_back(Evaluate(context, batch));
      FLEXCF_LOG(kInfo) << method_id << " seed " << seed << " flexibility " << options.grid[g]
                        << " valid " << levels.back().valid_fraction.value_or(-1.0);
    }
    result.reports.push_back(std::move(levels));
  }
  FinalizeAggregates(result);
  return result;
}

nlohmann::json NormalizedResult::ToJson() const {
  return {{"method", method}, {"reference", reference}, {"value", OptMap(value)}, {"sem", OptMap(sem)},
          {"undefined", undefined}};
}

NormalizedResult NormalizeAgainst(const SweepResult& result, const SweepResult& reference) {
  if (result.grid != reference.grid) throw UserError("normalization needs identical grids");
  NormalizedResult out;
  out.method = result.method;
  out.reference = reference.method;
  for (const auto& [metric, mean] : result.auc_mean) {
    auto ref_it = reference.auc_mean.find(metric);
    const std::optional<double> ref = ref_it == reference.auc_mean.end() ? std::nullopt : ref_it->second;
    if (!mean || !ref || *ref == 0.0) {
      out.value[metric] = std::nullopt;
      out.sem[metric] = std::nullopt;
      out.undefined.push_back(metric);
      continue;
    }
    const double ratio = *mean / *ref;
    const double sa = result.auc_sem.at(metric).value_or(0.0);
    const double sb = reference.auc_sem.at(metric).value_or(0.0);
    const double rel_a = *mean == 0.0 ? 0.0 : sa / *mean;
    const double rel_b = sb / *ref;
    out.value[metric] = ratio;
    out.sem[metric] = std::abs(ratio) * std::sqrt(rel_a * rel_a + rel_b * rel_b);
  }
  return out;
}

std::vector<ConstraintLevel> DivergenceConstraintLevels(FceganMode mode) {
  if (mode == FceganMode::kClassifier) return {{"none", 0.0}, {"small", 10.0}, {"large", 100.0}};
  return {{"none", 0.0}, {"small", 5.0}, {"large", 50.0}};
}

std::vector<std::pair<std::string, FceganConfig>> DivergenceStudyConfigs(const FceganConfig& base) {
  std::vector<std::pair<std::string, FceganConfig>> out;
  for (const auto& level : DivergenceConstraintLevels(base.mode)) {
    FceganConfig c = base;
    c.lambda_m = level.lambda_m;
    out.emplace_back(level.name, c);
  }
  return out;
}

std::string AggregateCsv(std::span<const SweepResult> results) {
  std::ostringstream out;
  out << "method,metric,level,mean,sem\n";
  auto cell = [](const std::optional<double>& v) { return v ? FormatDouble(*v) : std::string(); };
  for (const auto& r : results) {
    for (const std::string& metric : MetricNames()) {
      for (std::size_t g = 0; g < r.grid.size(); ++g) {
        std::vector<std::optional<double>> values;
        for (const auto& seed_reports : r.reports) values.push_back(seed_reports.at(g).Get(metric));
        out << r.method << "," << metric << "," << FormatDouble(r.grid[g]) << "," << cell(MeanOf(values)) << ","
            << cell(SemOf(values)) << "\n";
      }
      out << r.method << "," << metric << ",auc," << cell(r.auc_mean.at(metric)) << ","
          << cell(r.auc_sem.at(metric)) << "\n";
    }
  }
  return out.str();
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string Fmt(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << v;
  return s.str();
}

std::pair<double, double> Range(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 1.0};
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  lo = std::min(lo, 0.0);
  if (hi - lo < 1e-12) hi = lo + 1.0;
  return {lo, hi};
}

}  // namespace

std::string FlexibilitySvg(std::span<const SweepResult> results, const std::string& metric) {
  constexpr double W = 640, H = 400, L = 60, R = 170, T = 30, B = 50;
  std::vector<double> all;
  for (const auto& r : results) {
    for (std::size_t g = 0; g < r.grid.size(); ++g) {
      if (auto v = r.LevelMean(metric, g)) all.push_back(*v);
    }
  }
  const auto [lo, hi] = Range(all);
  auto px = [&](double x) { return L + x * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - lo) / (hi - lo) * (H - T - B); };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << L << "\" y=\"20\" font-size=\"14\">" << metric << " vs flexibility</text>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double x = t / 4.0, y = lo + (hi - lo) * t / 4.0;
    svg << "<text x=\"" << px(x) - 10 << "\" y=\"" << H - B + 18 << "\" font-size=\"11\">" << Fmt(x) << "</text>\n";
    svg << "<text x=\"" << L - 45 << "\" y=\"" << py(y) + 4 << "\" font-size=\"11\">" << Fmt(y) << "</text>\n";
  }
  svg << "<text x=\"" << (W - R + L) / 2 - 40 << "\" y=\"" << H - 10 << "\" font-size=\"12\">fraction mutable</text>\n";
  for (std::size_t m = 0; m < results.size(); ++m) {
    const auto& r = results[m];
    const char* color = kPalette[m % std::size(kPalette)];
    std::ostringstream points;
    for (std::size_t g = 0; g < r.grid.size(); ++g) {
      if (auto v = r.LevelMean(metric, g)) points << px(r.grid[g]) << "," << py(*v) << " ";
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << points.str()
        << "\"/>\n";
    svg << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 18 * (m + 1) << "\" font-size=\"12\" fill=\"" << color
        << "\">" << r.method << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string AucBarSvg(std::span<const SweepResult> results, const std::string& metric) {
  constexpr double W = 640, H = 400, L = 60, T = 30, B = 90;
  std::vector<double> all;
  for (const auto& r : results) {
    if (auto v = r.auc_mean.at(metric)) all.push_back(*v + r.auc_sem.at(metric).value_or(0.0));
  }
  const auto [lo, hi] = Range(all);
  const double slot = (W - L - 20) / std::max<std::size_t>(1, results.size());
  auto py = [&](double y) { return H - B - (y - lo) / (hi - lo) * (H - T - B); };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << L << "\" y=\"20\" font-size=\"14\">AUC of " << metric << " (mean, SEM)</text>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << py(lo) << "\" x2=\"" << W - 20 << "\" y2=\"" << py(lo)
      << "\" stroke=\"black\"/>\n";
  for (std::size_t m = 0; m < results.size(); ++m) {
    const auto& r = results[m];
    const double x = L + slot * m + slot * 0.15;
    const auto mean = r.auc_mean.at(metric);
    if (mean) {
      const double top = py(*mean), base = py(lo);
      svg << "<rect x=\"" << x << "\" y=\"" << std::min(top, base) << "\" width=\"" << slot * 0.7 << "\" height=\""
          << std::abs(base - top) << "\" fill=\"" << kPalette[m % std::size(kPalette)] << "\"/>\n";
      const double sem = r.auc_sem.at(metric).value_or(0.0);
      const double cx = x + slot * 0.35;
      svg << "<line x1=\"" << cx << "\" y1=\"" << py(*mean - sem) << "\" x2=\"" << cx << "\" y2=\""
          << py(*mean + sem) << "\" stroke=\"black\"/>\n";
      svg << "<text x=\"" << x << "\" y=\"" << top - 4 << "\" font-size=\"11\">" << Fmt(*mean) << "</text>\n";
    }
    svg << "<text x=\"" << x << "\" y=\"" << H - B + 16 << "\" font-size=\"10\" transform=\"rotate(30 " << x << ","
        << H - B + 16 << ")\">" << r.method << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void WriteSweepResults(const std::string& dir, std::span<const SweepResult> results, const Provenance& provenance) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "cells");
  auto write = [](const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UserError("cannot write '" + path.string() + "'");
    out << text;
  };
  for (const auto& r : results) {
    for (std::size_t s = 0; s < r.seeds.size(); ++s) {
      nlohmann::json cell = {{"method", r.method}, {"seed", r.seeds[s]}, {"grid", r.grid}};
      nlohmann::json levels = nlohmann::json::array();
      for (const auto& report : r.reports[s]) levels.push_back(report.ToJson());
      cell["levels"] = levels;
      nlohmann::json auc = nlohmann::json::object();
      for (const auto& [metric, values] : r.auc) auc[metric] = Opt(values.at(s));
      cell["auc"] = auc;
      write(fs::path(dir) / "cells" / (r.method + "_seed" + std::to_string(r.seeds[s]) + ".json"),
            cell.dump(2) + "\n");
    }
  }
  write(fs::path(dir) / "aggregate.csv", AggregateCsv(results));
  for (const std::string metric : {"valid_fraction", "mean_percentile_shift", "categories_changed"}) {
    write(fs::path(dir) / ("flexibility_" + metric + ".svg"), FlexibilitySvg(results, metric));
    write(fs::path(dir) / ("auc_" + metric + ".svg"), AucBarSvg(results, metric));
  }
  nlohmann::json prov = {{"commit", provenance.commit}, {"dataset", provenance.dataset},
                         {"configs", provenance.configs}};
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& r : results) methods.push_back(r.method);
  prov["methods"] = methods;
  write(fs::path(dir) / "provenance.json", prov.dump(2) + "\n");
}

}  // namespace flexcf
