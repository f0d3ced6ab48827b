/*
 * Copyright 2026 The perturbench Authors.
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

#ifndef PERTURBENCH_RUN_H_
#define PERTURBENCH_RUN_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturbench/aggregate.h"
#include "perturbench/backends.h"
#include "perturbench/baselines.h"
#include "perturbench/curation.h"
#include "perturbench/records.h"
#include "perturbench/stratified.h"
#include "perturbench/synthetic.h"

namespace perturbench {

// kind is "synthetic" (in-process oracle backends) or "remote" (HTTP
// service; URL and token come from the environment).
struct BackendRef {
  std::string kind = "synthetic";
  std::string id;
  std::string weights;  // opaque reference, recorded for provenance
  nlohmann::json options = nlohmann::json::object();

  bool operator==(const BackendRef&) const = default;
};

struct DatasetConfig {
  std::string kind = "synthetic";  // or "directory" (PNG files)
  int n_images = 8;
  uint64_t seed = 0;
  std::string path;

  bool operator==(const DatasetConfig&) const = default;
};

struct SyntheticConfig {
  int num_pairs = 5;
  uint64_t seed = 7;
  int region_rows = 4;
  int region_cols = 5;

  bool operator==(const SyntheticConfig&) const = default;
};

struct RunConfig {
  uint64_t seed = 0;
  int parallelism = 1;
  int max_inflight_inpaint = 4;
  std::string cache_dir = "cache";
  std::string out_dir = "out";
  // ClassSet JSON written by `curate`; evaluation images are filtered by it
  // when set.
  std::string class_set;

  std::vector<std::string> metrics = {"stratified"};
  std::vector<std::string> attributors = {"ground_truth", "random"};
  int random_seeds = 5;
  // Remote attribution methods whose maps ignore the requested class.
  std::vector<std::string> class_agnostic_attributors;

  BackendRef classifier{"synthetic", "oracle-classifier", "", nlohmann::json::object()};
  BackendRef attributor_backend{"synthetic", "", "", nlohmann::json::object()};
  BackendRef inpainter{"synthetic", "oracle-inpainter", "", nlohmann::json::object()};
  BackendRef generator{"synthetic", "oracle-generator", "", nlohmann::json::object()};
  SyntheticConfig synthetic;
  DatasetConfig dataset;

  // The inpainting seed is always the run seed; stratified.inpaint_seed is
  // overwritten when the run starts.
  StratifiedConfig stratified;
  int blur_kernel_size = 11;
  double blur_sigma = 5.0;
  MeanScope mean_scope = MeanScope::kPerImage;
  Granularity baseline_granularity = Granularity::kPatch;
  AggregateOptions aggregate;

  int curation_n_per_class = 20;
  double curation_threshold = 0.5;
  bool sample_per_class = false;

  // Throws ConfigError on the first problem found.
  void Validate() const;
};

nlohmann::json ToJson(const RunConfig& config);
// Unknown top-level keys are rejected.
RunConfig RunConfigFromJson(const nlohmann::json& j);
RunConfig LoadRunConfig(const std::filesystem::path& path);

// Hash of every setting that can change a score. Paths, parallelism and the
// in-flight cap are excluded.
std::string ConfigHash(const RunConfig& config);
nlohmann::json HashedConfigJson(const RunConfig& config);

// Metric ids: stratified, stratified_top10, stratified_unweighted,
// stratified_pixel, delete, blur, mean, violation, saliency.
std::vector<std::string> KnownMetrics();

struct MetricSpec {
  enum class Kind { kStratified, kPerturbation, kViolation, kSaliency };
  std::string id;
  Kind kind = Kind::kStratified;
  StratifiedConfig stratified;
  PerturbationKind perturbation;
  CurveOptions curve;

  int patch_size() const {
    return kind == Kind::kStratified ? stratified.effective_patch_size()
                                     : curve.effective_patch_size();
  }
};

MetricSpec ResolveMetric(const std::string& id, const RunConfig& config);

struct Backends {
  std::shared_ptr<const synthetic::World> world;  // null without synthetic backends
  std::shared_ptr<const Classifier> classifier;
  std::shared_ptr<const Inpainter> inpainter;
  std::shared_ptr<const Generator> generator;
  // Every configured attributor except "random", which is built per image.
  std::map<std::string, std::shared_ptr<const Attributor>> attributors;
};

struct BackendNeeds {
  bool inpainter = false;
  bool generator = false;
  bool attributors = false;
};

Backends BuildBackends(const RunConfig& config, BackendNeeds needs);

std::vector<EvalImage> LoadDataset(const RunConfig& config, const Backends& backends);

struct CurateOutcome {
  ClassSet class_set;
  std::filesystem::path path;
};

// Curates the class set and writes it to config.class_set, or to
// <out_dir>/class_set.json when that is empty.
CurateOutcome CmdCurate(const RunConfig& config);
CurateOutcome RunCuration(const RunConfig& config, const Backends& backends);

struct EvaluateOptions {
  // Stops handing out cells after this many (simulates an interrupted run).
  std::optional<int> stop_after_cells;
};

struct EvaluateOutcome {
  EvaluationReport report;
  std::string config_hash;
  int cells = 0;
  int resumed_cells = 0;
  int ok_cells = 0;
  int skipped_cells = 0;
  int failed_cells = 0;
  int64_t cache_hits = 0;
  int64_t cache_misses = 0;
  std::filesystem::path records_path;
  std::filesystem::path report_path;
  bool completed = false;

  int exit_code() const { return ok_cells > 0 ? 0 : 1; }
};

EvaluateOutcome CmdEvaluate(const RunConfig& config);
EvaluateOutcome RunEvaluation(const RunConfig& config, const Backends& backends,
                              const EvaluateOptions& options = {});

// Aggregates parsed records into a report. All records must share one
// config hash.
EvaluationReport BuildReport(const RecordFile& records, const AggregateOptions& options,
                             const nlohmann::json& config_snapshot);

// Writes report.json, curves_<metric>.csv and the plots into out_dir.
void WriteOutputs(const EvaluationReport& report, const std::filesystem::path& out_dir);

// Re-aggregates an existing records file. The aggregation options and the
// config snapshot come from `config` when given, otherwise from
// run_config.json next to the records. Empty input is an error.
EvaluationReport CmdReport(const std::filesystem::path& records,
                           const std::filesystem::path& out_dir,
                           const std::optional<RunConfig>& config = std::nullopt);

}  // namespace perturbench

#endif  // PERTURBENCH_RUN_H_
