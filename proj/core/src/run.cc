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

#include "perturbench/run.h"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "perturbench/cache.h"
#include "perturbench/errors.h"
#include "perturbench/hashing.h"
#include "perturbench/plot.h"
#include "perturbench/remote.h"

namespace perturbench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kSyntheticAttributors = {"ground_truth", "noisy_ground_truth",
                                                     "random"};
constexpr char kRecordsFile[] = "records.jsonl";
constexpr char kReportFile[] = "report.json";
constexpr char kRunConfigFile[] = "run_config.json";

json RefToJson(const BackendRef& r) {
  return {{"kind", r.kind}, {"id", r.id}, {"weights", r.weights}, {"options", r.options}};
}

BackendRef RefFromJson(const json& j, BackendRef ref) {
  ref.kind = j.value("kind", ref.kind);
  ref.id = j.value("id", ref.id);
  ref.weights = j.value("weights", ref.weights);
  ref.options = j.value("options", ref.options);
  return ref;
}

void CheckKind(const BackendRef& ref, const char* what) {
  if (ref.kind != "synthetic" && ref.kind != "remote") {
    throw ConfigError(std::string(what) + ".kind must be 'synthetic' or 'remote', got '" +
                      ref.kind + "'");
  }
}

template <typename T>
void CheckUnique(const std::vector<T>& v, const char* what) {
  std::set<T> seen;
  for (const auto& x : v) {
    if (!seen.insert(x).second) throw ConfigError(std::string("duplicate entry in ") + what);
  }
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFileAtomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

Endpoint RequireEndpoint(const std::string& prefix, const char* what) {
  auto endpoint = Endpoint::FromEnvironment(prefix);
  if (!endpoint) {
    throw ConfigError(std::string(what) + " is remote but " + prefix + "_URL is not set");
  }
  return *endpoint;
}

RemoteEngineOptions EngineOptions(const BackendRef& ref) {
  RemoteEngineOptions o;
  if (!ref.id.empty()) o.engine_id = ref.id;
  o.engine_version = ref.options.value("version", o.engine_version);
  o.guidance_scale = ref.options.value("guidance_scale", o.guidance_scale);
  o.working_size = ref.options.value("working_size", o.working_size);
  if (ref.options.contains("num_inference_steps")) {
    o.num_inference_steps = ref.options.at("num_inference_steps").get<int>();
  }
  return o;
}

json BackendInfo(const RunConfig& config, const Backends& backends) {
  json info = {{"classifier",
                {{"id", backends.classifier->id()},
                 {"version", backends.classifier->version()},
                 {"weights", config.classifier.weights}}}};
  if (backends.inpainter) {
    info["inpainter"] = {{"id", backends.inpainter->id()},
                         {"version", backends.inpainter->version()},
                         {"parameters", backends.inpainter->parameters()}};
  }
  json attributors = json::object();
  for (const auto& [id, a] : backends.attributors) attributors[id] = a->version();
  if (std::find(config.attributors.begin(), config.attributors.end(), "random") !=
      config.attributors.end()) {
    attributors["random"] = "1";
  }
  info["attributors"] = std::move(attributors);
  return info;
}

struct Cell {
  size_t image = 0;
  std::string method;
  size_t metric = 0;
};

ImageScore RunMetric(const MetricSpec& spec, const EvalImage& image,
                     const Classifier& classifier, const Attributor& attributor,
                     const Inpainter* inpainter) {
  switch (spec.kind) {
    case MetricSpec::Kind::kStratified:
      return EvaluateImage(image, classifier, attributor, *inpainter, spec.stratified, spec.id);
    case MetricSpec::Kind::kPerturbation:
      return BaselineCurve(image, classifier, attributor, spec.perturbation, spec.curve);
    case MetricSpec::Kind::kViolation:
      return ViolationCurve(image, classifier, attributor, spec.curve);
    case MetricSpec::Kind::kSaliency:
      return SaliencyCurve(image, classifier, attributor, spec.curve);
  }
  throw ArgumentError("unknown metric kind");
}

}  // namespace

void RunConfig::Validate() const {
  if (classifier.id.empty()) throw ConfigError("classifier.id is required");
  CheckKind(classifier, "classifier");
  CheckKind(attributor_backend, "attributor_backend");
  CheckKind(inpainter, "inpainter");
  CheckKind(generator, "generator");
  if (classifier.kind == "synthetic" && classifier.id != "oracle-classifier" &&
      classifier.id != "oracle-classifier-ood") {
    throw ConfigError("unknown synthetic classifier '" + classifier.id +
                      "' (expected oracle-classifier or oracle-classifier-ood)");
  }
  if (inpainter.kind == "synthetic" && inpainter.id != "oracle-inpainter") {
    throw ConfigError("unknown synthetic inpainter '" + inpainter.id + "'");
  }
  if (generator.kind == "synthetic" && generator.id != "oracle-generator") {
    throw ConfigError("unknown synthetic generator '" + generator.id + "'");
  }
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (max_inflight_inpaint < 1) throw ConfigError("max_inflight_inpaint must be >= 1");
  if (random_seeds < 1) throw ConfigError("random_seeds must be >= 1");

  if (metrics.empty()) throw ConfigError("at least one metric is required");
  CheckUnique(metrics, "metrics");
  const auto known = KnownMetrics();
  for (const auto& m : metrics) {
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw ConfigError("unknown metric '" + m + "'");
    }
  }
  if (attributors.empty()) throw ConfigError("at least one attributor is required");
  CheckUnique(attributors, "attributors");
  for (const auto& a : attributors) {
    if (a.empty()) throw ConfigError("empty attributor id");
    if (attributor_backend.kind == "synthetic" && !kSyntheticAttributors.count(a)) {
      throw ConfigError("unknown synthetic attributor '" + a + "'");
    }
  }

  if (dataset.kind == "synthetic") {
    if (dataset.n_images < 1) throw ConfigError("dataset.n_images must be >= 1");
  } else if (dataset.kind == "directory") {
    if (dataset.path.empty()) throw ConfigError("dataset.path is required for a directory");
  } else {
    throw ConfigError("dataset.kind must be 'synthetic' or 'directory'");
  }
  if (synthetic.num_pairs < 1) throw ConfigError("synthetic.num_pairs must be >= 1");

  stratified.Validate();
  PerturbationKind blur;
  blur.type = PerturbationType::kBlur;
  blur.blur_kernel_size = blur_kernel_size;
  blur.blur_sigma = blur_sigma;
  blur.Validate();
  if (curation_n_per_class < 1) throw ConfigError("curation.n_per_class must be >= 1");
  if (!(curation_threshold > 0.0) || curation_threshold > 1.0) {
    throw ConfigError("curation.threshold must lie in (0, 1]");
  }
}

json ToJson(const RunConfig& c) {
  json stratified = ToJson(c.stratified);
  return {{"seed", c.seed},
          {"parallelism", c.parallelism},
          {"max_inflight_inpaint", c.max_inflight_inpaint},
          {"cache_dir", c.cache_dir},
          {"out_dir", c.out_dir},
          {"class_set", c.class_set},
          {"metrics", c.metrics},
          {"attributors", c.attributors},
          {"random_seeds", c.random_seeds},
          {"class_agnostic_attributors", c.class_agnostic_attributors},
          {"classifier", RefToJson(c.classifier)},
          {"attributor_backend", RefToJson(c.attributor_backend)},
          {"inpainter", RefToJson(c.inpainter)},
          {"generator", RefToJson(c.generator)},
          {"synthetic",
           {{"num_pairs", c.synthetic.num_pairs},
            {"seed", c.synthetic.seed},
            {"region_rows", c.synthetic.region_rows},
            {"region_cols", c.synthetic.region_cols}}},
          {"dataset",
           {{"kind", c.dataset.kind},
            {"n_images", c.dataset.n_images},
            {"seed", c.dataset.seed},
            {"path", c.dataset.path}}},
          {"stratified", std::move(stratified)},
          {"perturbation",
           {{"blur_kernel_size", c.blur_kernel_size},
            {"blur_sigma", c.blur_sigma},
            {"mean_scope", c.mean_scope == MeanScope::kDataset ? "dataset" : "per_image"},
            {"granularity", ToString(c.baseline_granularity)}}},
          {"aggregate",
           {{"auc_rule", ToString(c.aggregate.rule)},
            {"include_random_in_normalization", c.aggregate.include_random_in_normalization}}},
          {"curation",
           {{"n_per_class", c.curation_n_per_class},
            {"threshold", c.curation_threshold},
            {"sample_per_class", c.sample_per_class}}}};
}

RunConfig RunConfigFromJson(const json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  static const std::set<std::string> keys = {
      "seed", "parallelism", "max_inflight_inpaint", "cache_dir", "out_dir", "class_set",
      "metrics", "attributors", "random_seeds", "class_agnostic_attributors", "classifier",
      "attributor_backend", "inpainter", "generator", "synthetic", "dataset", "stratified",
      "perturbation", "aggregate", "curation"};
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.parallelism = j.value("parallelism", c.parallelism);
    c.max_inflight_inpaint = j.value("max_inflight_inpaint", c.max_inflight_inpaint);
    c.cache_dir = j.value("cache_dir", c.cache_dir);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.class_set = j.value("class_set", c.class_set);
    c.metrics = j.value("metrics", c.metrics);
    c.attributors = j.value("attributors", c.attributors);
    c.random_seeds = j.value("random_seeds", c.random_seeds);
    c.class_agnostic_attributors =
        j.value("class_agnostic_attributors", c.class_agnostic_attributors);
    const json empty = json::object();
    c.classifier = RefFromJson(j.value("classifier", empty), c.classifier);
    c.attributor_backend = RefFromJson(j.value("attributor_backend", empty), c.attributor_backend);
    c.inpainter = RefFromJson(j.value("inpainter", empty), c.inpainter);
    c.generator = RefFromJson(j.value("generator", empty), c.generator);
    const json syn = j.value("synthetic", empty);
    c.synthetic.num_pairs = syn.value("num_pairs", c.synthetic.num_pairs);
    c.synthetic.seed = syn.value("seed", c.synthetic.seed);
    c.synthetic.region_rows = syn.value("region_rows", c.synthetic.region_rows);
    c.synthetic.region_cols = syn.value("region_cols", c.synthetic.region_cols);
    const json ds = j.value("dataset", empty);
    c.dataset.kind = ds.value("kind", c.dataset.kind);
    c.dataset.n_images = ds.value("n_images", c.dataset.n_images);
    c.dataset.seed = ds.value("seed", c.dataset.seed);
    c.dataset.path = ds.value("path", c.dataset.path);
    c.stratified = StratifiedConfigFromJson(j.value("stratified", empty));
    const json pert = j.value("perturbation", empty);
    c.blur_kernel_size = pert.value("blur_kernel_size", c.blur_kernel_size);
    c.blur_sigma = pert.value("blur_sigma", c.blur_sigma);
    const std::string scope = pert.value("mean_scope", std::string("per_image"));
    if (scope == "dataset") {
      c.mean_scope = MeanScope::kDataset;
    } else if (scope != "per_image") {
      throw ConfigError("perturbation.mean_scope must be 'per_image' or 'dataset'");
    }
    c.baseline_granularity = GranularityFromString(pert.value("granularity", std::string("patch")));
    const json agg = j.value("aggregate", empty);
    c.aggregate.rule = AucRuleFromString(agg.value("auc_rule", std::string("mean")));
    c.aggregate.include_random_in_normalization = agg.value(
        "include_random_in_normalization", c.aggregate.include_random_in_normalization);
    const json cur = j.value("curation", empty);
    c.curation_n_per_class = cur.value("n_per_class", c.curation_n_per_class);
    c.curation_threshold = cur.value("threshold", c.curation_threshold);
    c.sample_per_class = cur.value("sample_per_class", c.sample_per_class);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig LoadRunConfig(const fs::path& path) {
  json j;
  try {
    j = json::parse(ReadFile(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return RunConfigFromJson(j);
}

json HashedConfigJson(const RunConfig& config) {
  json j = ToJson(config);
  for (const char* key : {"cache_dir", "out_dir", "parallelism", "max_inflight_inpaint",
                          "class_set"}) {
    j.erase(key);
  }
  j["stratified"].erase("inpaint_seed");
  return j;
}

std::string ConfigHash(const RunConfig& config) {
  return Sha256Hex(HashedConfigJson(config).dump());
}

std::vector<std::string> KnownMetrics() {
  return {"stratified", "stratified_top10", "stratified_unweighted", "stratified_pixel",
          "delete",     "blur",             "mean",                  "violation",
          "saliency"};
}

MetricSpec ResolveMetric(const std::string& id, const RunConfig& config) {
  MetricSpec spec;
  spec.id = id;
  spec.stratified = config.stratified;
  spec.stratified.inpaint_seed = config.seed;
  spec.curve = {config.stratified.steps, config.stratified.patch_size,
                config.baseline_granularity};
  spec.perturbation.blur_kernel_size = config.blur_kernel_size;
  spec.perturbation.blur_sigma = config.blur_sigma;
  spec.perturbation.mean_scope = config.mean_scope;
  if (id == "stratified") {
  } else if (id == "stratified_top10") {
    spec.stratified.target_rank = 10;
  } else if (id == "stratified_unweighted") {
    spec.stratified.apply_weighting = false;
  } else if (id == "stratified_pixel") {
    spec.stratified.granularity = Granularity::kPixel;
  } else if (id == "delete") {
    spec.kind = MetricSpec::Kind::kPerturbation;
    spec.perturbation.type = PerturbationType::kDelete;
  } else if (id == "blur") {
    spec.kind = MetricSpec::Kind::kPerturbation;
    spec.perturbation.type = PerturbationType::kBlur;
  } else if (id == "mean") {
    spec.kind = MetricSpec::Kind::kPerturbation;
    spec.perturbation.type = PerturbationType::kChannelMean;
  } else if (id == "violation") {
    spec.kind = MetricSpec::Kind::kViolation;
  } else if (id == "saliency") {
    spec.kind = MetricSpec::Kind::kSaliency;
  } else {
    throw ConfigError("unknown metric '" + id + "'");
  }
  return spec;
}

Backends BuildBackends(const RunConfig& config, BackendNeeds needs) {
  config.Validate();
  Backends b;
  const bool any_synthetic =
      config.classifier.kind == "synthetic" ||
      (needs.inpainter && config.inpainter.kind == "synthetic") ||
      (needs.generator && config.generator.kind == "synthetic") ||
      (needs.attributors && config.attributor_backend.kind == "synthetic") ||
      config.dataset.kind == "synthetic";
  if (any_synthetic) {
    const bool ood =
        config.classifier.kind == "synthetic" && config.classifier.id == "oracle-classifier-ood";
    b.world = std::make_shared<synthetic::World>(
        synthetic::StandardWorld(config.synthetic.num_pairs, config.synthetic.seed, ood,
                                 config.synthetic.region_rows, config.synthetic.region_cols));
  }

  if (config.classifier.kind == "synthetic") {
    b.classifier = std::make_shared<synthetic::OracleClassifier>(b.world);
  } else {
    auto remote = std::make_shared<RemoteClassifier>(
        RequireEndpoint("PERTURBENCH_CLASSIFIER", "classifier"));
    if (remote->id() != config.classifier.id) {
      throw ConfigError("classifier service reports id '" + remote->id() + "', config asks for '" +
                        config.classifier.id + "'");
    }
    b.classifier = remote;
  }
  b.classifier = MakeShareSafe(b.classifier);

  if (needs.inpainter) {
    if (config.inpainter.kind == "synthetic") {
      b.inpainter = std::make_shared<synthetic::OracleInpainter>(b.world);
    } else {
      b.inpainter = std::make_shared<RemoteInpainter>(
          RequireEndpoint(kInpaintEnvPrefix, "inpainter"), EngineOptions(config.inpainter));
    }
  }
  if (needs.generator) {
    if (config.generator.kind == "synthetic") {
      b.generator = std::make_shared<synthetic::OracleGenerator>(b.world);
    } else {
      auto endpoint = Endpoint::FromEnvironment("PERTURBENCH_GENERATE");
      if (!endpoint) endpoint = RequireEndpoint(kInpaintEnvPrefix, "generator");
      b.generator = std::make_shared<RemoteGenerator>(*endpoint, EngineOptions(config.generator),
                                                      b.classifier->input_size());
    }
  }
  if (needs.attributors) {
    for (const auto& id : config.attributors) {
      if (id == "random") continue;
      std::shared_ptr<const Attributor> a;
      if (config.attributor_backend.kind == "synthetic") {
        if (id == "ground_truth") {
          a = std::make_shared<synthetic::GroundTruthAttributor>(b.world);
        } else {
          a = std::make_shared<synthetic::NoisyGroundTruthAttributor>(
              b.world, DeriveSeed("noisy_ground_truth", config.seed));
        }
      } else {
        const bool agnostic =
            std::find(config.class_agnostic_attributors.begin(),
                      config.class_agnostic_attributors.end(),
                      id) != config.class_agnostic_attributors.end();
        a = std::make_shared<RemoteAttributor>(
            RequireEndpoint("PERTURBENCH_ATTRIBUTOR", "attributor_backend"), id, !agnostic);
      }
      b.attributors[id] = MakeShareSafe(a);
    }
  }
  return b;
}

std::vector<EvalImage> LoadDataset(const RunConfig& config, const Backends& backends) {
  std::vector<EvalImage> images;
  if (config.dataset.kind == "synthetic") {
    if (!backends.world) throw ConfigError("a synthetic dataset needs the synthetic world");
    images = synthetic::MakeDataset(*backends.world, config.dataset.n_images, config.dataset.seed);
  } else {
    const fs::path dir = config.dataset.path;
    if (!fs::is_directory(dir)) throw ConfigError("dataset path " + dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) images.push_back({f.stem().string(), ReadPng(f.string())});
    if (images.empty()) throw ConfigError("no PNG images in " + dir.string());
  }
  const int n = backends.classifier->input_size();
  const Shape input{n, n};
  for (auto& e : images) {
    if (e.image.shape() != input) e.image = ResizeBilinear(e.image, input);
  }
  return images;
}

CurateOutcome RunCuration(const RunConfig& config, const Backends& backends) {
  CurationOptions options;
  options.n_per_class = config.curation_n_per_class;
  options.threshold = config.curation_threshold;
  options.seed = config.seed;
  options.parallelism = config.parallelism;
  CurateOutcome out;
  out.class_set = CurateClasses(*backends.classifier, *backends.generator, options);
  out.path = config.class_set.empty() ? fs::path(config.out_dir) / "class_set.json"
                                      : fs::path(config.class_set);
  if (out.path.has_parent_path()) fs::create_directories(out.path.parent_path());
  WriteFileAtomic(out.path, ToJson(out.class_set).dump(2) + "\n");
  spdlog::info("class set: {} of {} classes accepted, written to {}", out.class_set.classes.size(),
               out.class_set.per_class.size(), out.path.string());
  return out;
}

CurateOutcome CmdCurate(const RunConfig& config) {
  config.Validate();
  return RunCuration(config, BuildBackends(config, {.generator = true}));
}

EvaluationReport BuildReport(const RecordFile& records, const AggregateOptions& options,
                             const json& config_snapshot) {
  if (records.records.empty()) {
    throw ArgumentError(records.malformed > 0 ? "no valid score records" : "no score records");
  }
  EvaluationReport report;
  report.config_hash = records.records.front().config_hash;
  report.options = options;
  report.malformed_records = records.malformed;
  std::vector<ImageScore> scores;
  std::set<std::string> agnostic;
  for (const auto& r : records.records) {
    if (r.config_hash != report.config_hash) {
      throw ConfigError("records mix config hashes " + report.config_hash + " and " +
                        r.config_hash);
    }
    switch (r.status) {
      case RecordStatus::kOk:
        if (r.score->class_agnostic) agnostic.insert(r.method_id);
        scores.push_back(*r.score);
        break;
      case RecordStatus::kSkipped:
        ++report.skipped_cells;
        break;
      case RecordStatus::kFailed:
        ++report.failed_cells;
        break;
    }
  }
  report.metrics = SummarizeMetrics(std::move(scores), options);
  report.class_agnostic_methods.assign(agnostic.begin(), agnostic.end());
  report.provenance = {{"tool", "perturbench 0.1.0"},
                       {"config", config_snapshot},
                       {"backends", records.records.front().backends}};
  return report;
}

void WriteOutputs(const EvaluationReport& report, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  WriteFileAtomic(out_dir / kReportFile, ToJson(report).dump(2) + "\n");
  for (const auto& [id, metric] : report.metrics) {
    std::ostringstream csv;
    csv.precision(17);
    csv << "config_hash,metric,method,p,mean_score,n_images\n";
    for (const auto& [method, s] : metric.methods) {
      for (size_t i = 0; i < s.curve.steps.size(); ++i) {
        csv << report.config_hash << ',' << id << ',' << method << ',' << s.curve.steps[i] << ','
            << s.curve.mean_scores[i] << ',' << s.curve.n_images[i] << '\n';
      }
    }
    WriteFileAtomic(out_dir / ("curves_" + id + ".csv"), csv.str());
  }
  PlotReport(report, out_dir);
}

EvaluateOutcome RunEvaluation(const RunConfig& config, const Backends& backends,
                              const EvaluateOptions& options) {
  config.Validate();
  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir);
  EvaluateOutcome out;
  out.records_path = out_dir / kRecordsFile;
  out.report_path = out_dir / kReportFile;

  std::vector<EvalImage> images = LoadDataset(config, backends);
  std::string class_set_text;
  if (!config.class_set.empty()) {
    class_set_text = ReadFile(config.class_set);
    ClassSet set = ClassSetFromJson(json::parse(class_set_text));
    if (set.classifier_id != backends.classifier->id()) {
      throw ConfigError("class set was curated with classifier '" + set.classifier_id + "'");
    }
    FilterOptions filter{config.stratified.target_rank, config.sample_per_class, config.seed};
    FilterResult kept = FilterEvalImages(images, *backends.classifier, set, filter);
    spdlog::info("class-set filter kept {} of {} images", kept.kept.size(), images.size());
    images = std::move(kept.kept);
  } else {
    spdlog::warn("no class set configured; evaluating every image unfiltered");
  }
  out.config_hash = Sha256().Field(ConfigHash(config)).Field(class_set_text).HexDigest();

  std::vector<MetricSpec> metrics;
  bool needs_inpainter = false;
  for (const auto& id : config.metrics) {
    metrics.push_back(ResolveMetric(id, config));
    if (metrics.back().kind == MetricSpec::Kind::kStratified) needs_inpainter = true;
    if (metrics.back().perturbation.type == PerturbationType::kChannelMean &&
        config.mean_scope == MeanScope::kDataset) {
      metrics.back().perturbation.dataset_mean = DatasetChannelMean(images);
    }
  }
  std::shared_ptr<const InpaintCache> cache;
  std::shared_ptr<const Inpainter> inpainter;
  if (needs_inpainter) {
    if (!backends.inpainter) throw ConfigError("stratified metrics need an inpainter");
    cache = std::make_shared<InpaintCache>(config.cache_dir);
    inpainter = std::make_shared<CachingInpainter>(
        std::make_shared<ThrottledInpainter>(backends.inpainter, config.max_inflight_inpaint),
        cache);
  }
  for (const auto& a : config.attributors) {
    if (a != "random" && !backends.attributors.count(a)) {
      throw ConfigError("no backend for attributor '" + a + "'");
    }
  }

  std::vector<Cell> cells;
  for (size_t i = 0; i < images.size(); ++i) {
    for (const auto& method : config.attributors) {
      for (size_t m = 0; m < metrics.size(); ++m) cells.push_back({i, method, m});
    }
  }
  out.cells = static_cast<int>(cells.size());

  // Resume: keep finished cells of this configuration, drop everything else.
  std::set<std::tuple<std::string, std::string, std::string>> wanted, done;
  for (const auto& c : cells) wanted.insert({images[c.image].id, c.method, metrics[c.metric].id});
  const bool existed = fs::exists(out.records_path);
  RecordFile previous = ReadRecords(out.records_path);
  std::vector<ScoreRecord> kept;
  for (auto& r : previous.records) {
    if (r.config_hash != out.config_hash || r.status == RecordStatus::kFailed) continue;
    if (!wanted.count(r.key()) || !done.insert(r.key()).second) continue;
    kept.push_back(std::move(r));
  }
  if (existed) {
    const size_t dropped = previous.records.size() - kept.size() + previous.malformed;
    if (!kept.empty() || dropped > 0) {
      spdlog::info("resuming: {} finished cells kept, {} stale or broken lines dropped",
                   kept.size(), dropped);
    }
  }
  RewriteRecords(out.records_path, kept);
  out.resumed_cells = static_cast<int>(kept.size());
  WriteFileAtomic(out_dir / kRunConfigFile, ToJson(config).dump(2) + "\n");

  std::vector<const Cell*> todo;
  for (const auto& c : cells) {
    if (!done.count({images[c.image].id, c.method, metrics[c.metric].id})) todo.push_back(&c);
  }
  size_t limit = todo.size();
  if (options.stop_after_cells) {
    limit = std::min(limit, static_cast<size_t>(std::max(0, *options.stop_after_cells)));
  }

  const json backend_info = BackendInfo(config, backends);
  RecordWriter writer(out.records_path);
  std::atomic<size_t> next{0};
  std::atomic<int> finished{0};
  auto compute = [&](const Cell& cell) {
    const EvalImage& image = images[cell.image];
    const MetricSpec& spec = metrics[cell.metric];
    ScoreRecord rec;
    rec.config_hash = out.config_hash;
    rec.image_id = image.id;
    rec.method_id = cell.method;
    rec.metric_id = spec.id;
    rec.backends = backend_info;
    try {
      if (cell.method == "random") {
        std::vector<ImageScore> runs;
        for (int r = 0; r < config.random_seeds; ++r) {
          const RandomAttributor random(
              DeriveSeed("random", image.id, config.seed, static_cast<uint64_t>(r)),
              spec.patch_size());
          runs.push_back(RunMetric(spec, image, *backends.classifier, random, inpainter.get()));
        }
        rec.score = MergeSeedRuns(runs);
      } else {
        rec.score = RunMetric(spec, image, *backends.classifier,
                              *backends.attributors.at(cell.method), inpainter.get());
      }
      if (rec.score->error_steps() > 0) {
        spdlog::warn("{} / {} / {}: {} step(s) errored and are excluded", image.id, cell.method,
                     spec.id, rec.score->error_steps());
      }
    } catch (const AttributionError& e) {
      rec.status = RecordStatus::kSkipped;
      rec.reason = e.what();
      spdlog::warn("{} / {} / {}: image skipped: {}", image.id, cell.method, spec.id, e.what());
    } catch (const std::exception& e) {
      rec.status = RecordStatus::kFailed;
      rec.reason = e.what();
      spdlog::error("{} / {} / {}: cell failed: {}", image.id, cell.method, spec.id, e.what());
    }
    return rec;
  };
  std::exception_ptr writer_error;
  std::mutex error_mu;
  auto worker = [&] {
    for (size_t i = next++; i < limit; i = next++) {
      ScoreRecord rec = compute(*todo[i]);
      try {
        writer.Write(rec);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!writer_error) writer_error = std::current_exception();
        next = limit;
        return;
      }
      const int n = ++finished;
      if (n % 50 == 0 || static_cast<size_t>(n) == limit) {
        spdlog::info("{}/{} cells done", n, limit);
      }
    }
  };
  {
    const int n_threads =
        std::clamp(config.parallelism, 1, std::max(1, static_cast<int>(limit)));
    std::vector<std::jthread> threads;
    for (int t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
  }
  if (writer_error) std::rethrow_exception(writer_error);
  if (cache) {
    out.cache_hits = cache->hits();
    out.cache_misses = cache->misses();
    spdlog::info("inpainting cache: {} hits, {} misses", out.cache_hits, out.cache_misses);
  }

  const RecordFile final_records = ReadRecords(out.records_path);
  for (const auto& r : final_records.records) {
    if (r.status == RecordStatus::kOk) ++out.ok_cells;
    if (r.status == RecordStatus::kSkipped) ++out.skipped_cells;
    if (r.status == RecordStatus::kFailed) ++out.failed_cells;
  }
  if (limit < todo.size()) {
    spdlog::info("stopped after {} of {} remaining cells", limit, todo.size());
    return out;
  }
  out.completed = true;
  if (final_records.records.empty()) {
    spdlog::error("no cell produced a record");
    return out;
  }
  out.report = BuildReport(final_records, config.aggregate, HashedConfigJson(config));
  WriteOutputs(out.report, out_dir);
  spdlog::info("{} cells ok, {} skipped, {} failed; report at {}", out.ok_cells,
               out.skipped_cells, out.failed_cells, out.report_path.string());
  return out;
}

EvaluateOutcome CmdEvaluate(const RunConfig& config) {
  config.Validate();
  bool needs_inpainter = false;
  for (const auto& id : config.metrics) {
    needs_inpainter |= ResolveMetric(id, config).kind == MetricSpec::Kind::kStratified;
  }
  return RunEvaluation(config,
                       BuildBackends(config, {.inpainter = needs_inpainter, .attributors = true}));
}

EvaluationReport CmdReport(const fs::path& records, const fs::path& out_dir,
                           const std::optional<RunConfig>& config) {
  if (!fs::exists(records)) throw ArgumentError("records file " + records.string() + " not found");
  RunConfig effective;
  if (config) {
    effective = *config;
  } else if (const fs::path sibling = records.parent_path() / kRunConfigFile;
             fs::exists(sibling)) {
    effective = LoadRunConfig(sibling);
  } else {
    spdlog::warn("no run config next to {}; using default aggregation options",
                 records.string());
  }
  const RecordFile file = ReadRecords(records);
  if (file.malformed > 0) spdlog::warn("{} malformed record(s) skipped", file.malformed);
  EvaluationReport report = BuildReport(file, effective.aggregate, HashedConfigJson(effective));
  WriteOutputs(report, out_dir);
  return report;
}

}  // namespace perturbench
