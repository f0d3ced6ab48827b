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

#ifndef PERTURBENCH_AGGREGATE_H_
#define PERTURBENCH_AGGREGATE_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturbench/score.h"

namespace perturbench {

// Dataset-level curve of one metric for one method.
struct PerturbationCurve {
  std::string method_id;
  std::string metric_id;
  std::vector<double> steps;
  std::vector<double> mean_scores;
  // Images contributing to each step (errored steps are excluded).
  std::vector<int> n_images;

  void Validate() const;
  bool operator==(const PerturbationCurve&) const = default;
};

enum class AucRule { kMean, kTrapezoid };

std::string ToString(AucRule rule);
AucRule AucRuleFromString(const std::string& s);

// kMean: arithmetic mean of the step scores (rectangle rule on equally
// spaced steps). kTrapezoid: trapezoid integral divided by the step span.
// Both lie in [0, 1].
double Auc(const PerturbationCurve& curve, AucRule rule = AucRule::kMean);

// Per-step mean over images, skipping steps without a score. A step no
// image scored reports 0 with n_images 0.
PerturbationCurve AverageCurve(std::span<const ImageScore> scores);

using MethodValues = std::map<std::string, double>;

// Min-max normalisation. The range is taken over every method except
// `excluded_from_range`, which is still mapped through the same affine
// transform (and may then fall outside [0, 1]). Throws ArgumentError for
// fewer than two methods in the range and DegenerateError when they are
// all equal.
MethodValues NormalizeAucs(const MethodValues& aucs,
                           const std::optional<std::string>& excluded_from_range = std::nullopt);

// |mean of the non-random normalised AUCs - normalised AUC of random|.
double RandDist(const MethodValues& normalized, const std::string& random_key);

// Methods by descending value; equal values by ascending id.
std::vector<std::string> RankMethods(const MethodValues& values);

struct AggregateOptions {
  AucRule rule = AucRule::kMean;
  bool include_random_in_normalization = true;
  std::string random_key = "random";

  bool operator==(const AggregateOptions&) const = default;
};

struct MethodSummary {
  PerturbationCurve curve;
  double auc_mean = 0.0;
  double auc_trapezoid = 0.0;
  double raw_auc = 0.0;  // under the selected rule
  std::optional<double> normalized_auc;
  int images = 0;
  int failed_steps = 0;

  bool operator==(const MethodSummary&) const = default;
};

struct MetricSummary {
  std::string metric_id;
  std::vector<double> steps;
  std::map<std::string, MethodSummary> methods;
  // Descending normalised AUC (raw AUC when not normalisable).
  std::vector<std::string> ranking;
  std::optional<double> rand_dist;
  bool non_discriminative = false;
  std::string note;

  bool operator==(const MetricSummary&) const = default;
};

// Groups scores by (metric, method) and summarises every metric. Scores are
// reduced in (metric, method, image) order, so the result does not depend on
// the input order.
std::map<std::string, MetricSummary> SummarizeMetrics(std::vector<ImageScore> scores,
                                                      const AggregateOptions& options);

struct EvaluationReport {
  std::string config_hash;
  AggregateOptions options;
  std::map<std::string, MetricSummary> metrics;
  std::vector<std::string> class_agnostic_methods;
  nlohmann::json provenance = nlohmann::json::object();
  // Cells skipped because the attributor failed, cells that failed for any
  // other reason, and records that could not be parsed.
  int skipped_cells = 0;
  int failed_cells = 0;
  int malformed_records = 0;

  bool operator==(const EvaluationReport&) const = default;
};

nlohmann::json ToJson(const EvaluationReport& report);
EvaluationReport EvaluationReportFromJson(const nlohmann::json& j);

}  // namespace perturbench

#endif  // PERTURBENCH_AGGREGATE_H_
