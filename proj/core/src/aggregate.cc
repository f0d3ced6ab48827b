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

#include "perturbench/aggregate.h"

#include <algorithm>
#include <set>
#include <tuple>

#include "perturbench/errors.h"

namespace perturbench {

using nlohmann::json;

namespace {

// Sums and quotients are formed in extended precision and rounded once, so
// that e.g. the mean of {1.0, 0.8, 0.6} is exactly the double 0.8.
using Wide = long double;

}  // namespace

void PerturbationCurve::Validate() const {
  if (steps.empty()) throw ArgumentError("empty perturbation curve");
  if (mean_scores.size() != steps.size() || n_images.size() != steps.size()) {
    throw ArgumentError("curve has mismatched step and score counts");
  }
  for (double v : mean_scores) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("curve score outside [0, 1]");
  }
}

std::string ToString(AucRule rule) { return rule == AucRule::kMean ? "mean" : "trapezoid"; }

AucRule AucRuleFromString(const std::string& s) {
  if (s == "mean") return AucRule::kMean;
  if (s == "trapezoid") return AucRule::kTrapezoid;
  throw ConfigError("auc_rule must be 'mean' or 'trapezoid', got '" + s + "'");
}

double Auc(const PerturbationCurve& curve, AucRule rule) {
  curve.Validate();
  const auto& y = curve.mean_scores;
  if (rule == AucRule::kMean || y.size() == 1) {
    Wide sum = 0;
    for (double v : y) sum += v;
    return static_cast<double>(sum / static_cast<Wide>(y.size()));
  }
  const auto& x = curve.steps;
  Wide area = 0;
  for (size_t i = 0; i + 1 < y.size(); ++i) {
    area += (Wide{x[i + 1]} - x[i]) * (Wide{y[i]} + y[i + 1]) / 2;
  }
  return static_cast<double>(area / (Wide{x.back()} - x.front()));
}

PerturbationCurve AverageCurve(std::span<const ImageScore> scores) {
  if (scores.empty()) throw ArgumentError("no scores to average");
  PerturbationCurve curve;
  curve.method_id = scores.front().method_id;
  curve.metric_id = scores.front().metric_id;
  curve.steps = scores.front().steps;
  std::vector<Wide> sum(curve.steps.size(), 0);
  curve.n_images.assign(curve.steps.size(), 0);
  for (const auto& s : scores) {
    if (s.method_id != curve.method_id || s.metric_id != curve.metric_id ||
        s.steps != curve.steps) {
      throw ArgumentError("cannot average scores of different methods, metrics or steps");
    }
    for (size_t i = 0; i < s.scores.size(); ++i) {
      if (!s.scores[i]) continue;
      sum[i] += *s.scores[i];
      ++curve.n_images[i];
    }
  }
  for (size_t i = 0; i < sum.size(); ++i) {
    curve.mean_scores.push_back(
        curve.n_images[i] > 0 ? static_cast<double>(sum[i] / curve.n_images[i]) : 0.0);
  }
  return curve;
}

MethodValues NormalizeAucs(const MethodValues& aucs,
                           const std::optional<std::string>& excluded_from_range) {
  double lo = 0.0, hi = 0.0;
  int in_range = 0;
  for (const auto& [method, v] : aucs) {
    if (excluded_from_range && method == *excluded_from_range) continue;
    lo = in_range == 0 ? v : std::min(lo, v);
    hi = in_range == 0 ? v : std::max(hi, v);
    ++in_range;
  }
  if (in_range < 2) throw ArgumentError("normalisation needs at least two methods");
  if (hi == lo) throw DegenerateError("every method has the same AUC");
  MethodValues out;
  for (const auto& [method, v] : aucs) {
    out[method] = static_cast<double>((Wide{v} - lo) / (Wide{hi} - lo));
  }
  return out;
}

double RandDist(const MethodValues& normalized, const std::string& random_key) {
  const auto it = normalized.find(random_key);
  if (it == normalized.end()) {
    throw ArgumentError("no '" + random_key + "' entry for the random baseline");
  }
  Wide sum = 0;
  int n = 0;
  for (const auto& [method, v] : normalized) {
    if (method == random_key) continue;
    sum += v;
    ++n;
  }
  if (n == 0) throw ArgumentError("rand_dist needs at least one non-random method");
  const Wide d = sum / n - it->second;
  return static_cast<double>(d < 0 ? -d : d);
}

std::vector<std::string> RankMethods(const MethodValues& values) {
  std::vector<std::pair<std::string, double>> v(values.begin(), values.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;  // map order already breaks ties by id
  });
  std::vector<std::string> out;
  for (auto& [method, value] : v) out.push_back(method);
  return out;
}

std::map<std::string, MetricSummary> SummarizeMetrics(std::vector<ImageScore> scores,
                                                      const AggregateOptions& options) {
  std::sort(scores.begin(), scores.end(), [](const ImageScore& a, const ImageScore& b) {
    return std::tie(a.metric_id, a.method_id, a.image_id) <
           std::tie(b.metric_id, b.method_id, b.image_id);
  });
  std::map<std::string, MetricSummary> out;
  size_t begin = 0;
  while (begin < scores.size()) {
    size_t end = begin;
    while (end < scores.size() && scores[end].metric_id == scores[begin].metric_id &&
           scores[end].method_id == scores[begin].method_id) {
      ++end;
    }
    const std::span<const ImageScore> group(scores.data() + begin, end - begin);
    MethodSummary summary;
    summary.curve = AverageCurve(group);
    summary.auc_mean = Auc(summary.curve, AucRule::kMean);
    summary.auc_trapezoid = Auc(summary.curve, AucRule::kTrapezoid);
    summary.raw_auc = options.rule == AucRule::kMean ? summary.auc_mean : summary.auc_trapezoid;
    summary.images = static_cast<int>(group.size());
    for (const auto& s : group) summary.failed_steps += s.error_steps();

    MetricSummary& metric = out[summary.curve.metric_id];
    if (metric.metric_id.empty()) {
      metric.metric_id = summary.curve.metric_id;
      metric.steps = summary.curve.steps;
    } else if (metric.steps != summary.curve.steps) {
      throw ArgumentError("metric '" + metric.metric_id + "' mixes step schedules");
    }
    metric.methods[summary.curve.method_id] = std::move(summary);
    begin = end;
  }

  for (auto& [metric_id, metric] : out) {
    MethodValues raw;
    for (const auto& [method, s] : metric.methods) raw[method] = s.raw_auc;
    const bool has_random = raw.count(options.random_key) > 0;
    std::optional<std::string> excluded;
    if (has_random && !options.include_random_in_normalization) excluded = options.random_key;
    try {
      const MethodValues normalized = NormalizeAucs(raw, excluded);
      for (const auto& [method, v] : normalized) metric.methods[method].normalized_auc = v;
      metric.ranking = RankMethods(normalized);
      if (has_random && normalized.size() >= 2) {
        metric.rand_dist = RandDist(normalized, options.random_key);
      }
    } catch (const DegenerateError& e) {
      metric.non_discriminative = true;
      metric.note = e.what();
      metric.ranking = RankMethods(raw);
    } catch (const ArgumentError& e) {
      metric.note = e.what();
      metric.ranking = RankMethods(raw);
    }
  }
  return out;
}

namespace {

json CurveToJson(const PerturbationCurve& c) {
  return {{"method_id", c.method_id},
          {"metric_id", c.metric_id},
          {"steps", c.steps},
          {"mean_scores", c.mean_scores},
          {"n_images", c.n_images}};
}

PerturbationCurve CurveFromJson(const json& j) {
  PerturbationCurve c;
  c.method_id = j.at("method_id").get<std::string>();
  c.metric_id = j.at("metric_id").get<std::string>();
  c.steps = j.at("steps").get<std::vector<double>>();
  c.mean_scores = j.at("mean_scores").get<std::vector<double>>();
  c.n_images = j.at("n_images").get<std::vector<int>>();
  return c;
}

template <typename T>
json Optional(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> OptionalDouble(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

json ToJson(const EvaluationReport& report) {
  json metrics = json::object();
  for (const auto& [id, m] : report.metrics) {
    json methods = json::object();
    for (const auto& [method, s] : m.methods) {
      methods[method] = {{"curve", CurveToJson(s.curve)},
                         {"auc_mean", s.auc_mean},
                         {"auc_trapezoid", s.auc_trapezoid},
                         {"raw_auc", s.raw_auc},
                         {"normalized_auc", Optional(s.normalized_auc)},
                         {"images", s.images},
                         {"failed_steps", s.failed_steps}};
    }
    metrics[id] = {{"metric_id", m.metric_id},
                   {"steps", m.steps},
                   {"methods", std::move(methods)},
                   {"ranking", m.ranking},
                   {"rand_dist", Optional(m.rand_dist)},
                   {"non_discriminative", m.non_discriminative},
                   {"note", m.note}};
  }
  return {{"config_hash", report.config_hash},
          {"aggregation",
           {{"auc_rule", ToString(report.options.rule)},
            {"include_random_in_normalization", report.options.include_random_in_normalization},
            {"random_key", report.options.random_key}}},
          {"metrics", std::move(metrics)},
          {"class_agnostic_methods", report.class_agnostic_methods},
          {"provenance", report.provenance},
          {"skipped_cells", report.skipped_cells},
          {"failed_cells", report.failed_cells},
          {"malformed_records", report.malformed_records}};
}

EvaluationReport EvaluationReportFromJson(const json& j) {
  EvaluationReport r;
  r.config_hash = j.at("config_hash").get<std::string>();
  const json& agg = j.at("aggregation");
  r.options.rule = AucRuleFromString(agg.at("auc_rule").get<std::string>());
  r.options.include_random_in_normalization =
      agg.at("include_random_in_normalization").get<bool>();
  r.options.random_key = agg.at("random_key").get<std::string>();
  for (const auto& [id, m] : j.at("metrics").items()) {
    MetricSummary summary;
    summary.metric_id = m.at("metric_id").get<std::string>();
    summary.steps = m.at("steps").get<std::vector<double>>();
    for (const auto& [method, s] : m.at("methods").items()) {
      MethodSummary ms;
      ms.curve = CurveFromJson(s.at("curve"));
      ms.auc_mean = s.at("auc_mean").get<double>();
      ms.auc_trapezoid = s.at("auc_trapezoid").get<double>();
      ms.raw_auc = s.at("raw_auc").get<double>();
      ms.normalized_auc = OptionalDouble(s, "normalized_auc");
      ms.images = s.at("images").get<int>();
      ms.failed_steps = s.at("failed_steps").get<int>();
      summary.methods[method] = std::move(ms);
    }
    summary.ranking = m.at("ranking").get<std::vector<std::string>>();
    summary.rand_dist = OptionalDouble(m, "rand_dist");
    summary.non_discriminative = m.at("non_discriminative").get<bool>();
    summary.note = m.value("note", "");
    r.metrics[id] = std::move(summary);
  }
  r.class_agnostic_methods = j.at("class_agnostic_methods").get<std::vector<std::string>>();
  r.provenance = j.at("provenance");
  r.skipped_cells = j.at("skipped_cells").get<int>();
  r.failed_cells = j.at("failed_cells").get<int>();
  r.malformed_records = j.at("malformed_records").get<int>();
  return r;
}

}  // namespace perturbench
