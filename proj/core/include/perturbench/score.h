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

#ifndef PERTURBENCH_SCORE_H_
#define PERTURBENCH_SCORE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace perturbench {

inline const std::vector<double> kDefaultSteps = {0.10, 0.20, 0.30, 0.40, 0.50};

// One backend round trip within a step: a single inpainting sample for the
// stratified metric, a single perturbation for the baselines.
struct SampleDetail {
  uint64_t seed = 0;
  std::optional<int> predicted_class_after;
  // Confidence of the original top-1 class after perturbation (violation).
  std::optional<double> confidence_after;
  // Causal weight; present only when the prediction reached the target.
  std::optional<double> weight;
  std::string inpaint_cache_key;
  // Non-empty when the sample failed and was excluded.
  std::string error;

  bool ok() const { return error.empty(); }
  bool operator==(const SampleDetail&) const = default;
};

struct StepDetail {
  double p = 0.0;
  // Inpainting target for stratified; the original top-1 for baselines.
  int target_class = -1;
  std::vector<SampleDetail> samples;

  bool operator==(const StepDetail&) const = default;
};

// Per-image curve produced by one metric for one attribution method. A step
// whose every sample errored has no score and is left out of aggregation.
struct ImageScore {
  std::string image_id;
  std::string method_id;
  std::string metric_id;
  std::vector<double> steps;
  std::vector<std::optional<double>> scores;
  std::vector<StepDetail> per_step;
  bool class_agnostic = false;

  int error_steps() const;
  bool operator==(const ImageScore&) const = default;
};

// Averages the runs of one method over several attribution seeds (the
// random lower bound). Per step, errored runs are excluded from the mean;
// sample details are concatenated in run order.
ImageScore MergeSeedRuns(const std::vector<ImageScore>& runs);

nlohmann::json ToJson(const ImageScore& score);
ImageScore ImageScoreFromJson(const nlohmann::json& j);

}  // namespace perturbench

#endif  // PERTURBENCH_SCORE_H_
