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

#ifndef PERTURBENCH_STRATIFIED_H_
#define PERTURBENCH_STRATIFIED_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturbench/backends.h"
#include "perturbench/score.h"

namespace perturbench {

enum class Granularity { kPatch, kPixel };

std::string ToString(Granularity g);
Granularity GranularityFromString(const std::string& s);

struct StratifiedConfig {
  // Rank (on the original image) of the class the inpainter paints towards.
  int target_rank = 2;
  bool apply_weighting = true;
  // kPixel skips patch downsampling; it behaves exactly like kPatch with
  // patch_size 1.
  Granularity granularity = Granularity::kPatch;
  std::vector<double> steps = kDefaultSteps;
  int patch_size = 16;
  uint64_t inpaint_seed = 0;
  // Inpainting samples averaged per step.
  int samples_per_step = 1;

  int effective_patch_size() const {
    return granularity == Granularity::kPixel ? 1 : patch_size;
  }
  void Validate() const;
};

nlohmann::json ToJson(const StratifiedConfig& config);
StratifiedConfig StratifiedConfigFromJson(const nlohmann::json& j);

// Class at 1-based `rank` after sorting scores in descending order, equal
// scores ordered by ascending class index.
int RankedClass(std::span<const double> scores, int rank);

// Seed for one inpainting call; a pure function of image, step and sample.
uint64_t InpaintSeed(const std::string& image_id, int step_index, uint64_t config_seed,
                     int sample = 0);

// Stratified inpainting scores for one image. For each step p the top-p
// patches of the top-1 relevance map are repainted towards the target class
// (prompt = its name). A step scores 0 unless the repainted image's top-1 is
// the target; then it scores the causal weight, or 1 without weighting.
//
// Inpainter failures mark the sample as errored and leave it out of the step
// mean (a step with no successful sample has no score). Attributor failures
// raise AttributionError: the image has to be skipped.
ImageScore EvaluateImage(const EvalImage& image, const Classifier& classifier,
                         const Attributor& attributor, const Inpainter& inpainter,
                         const StratifiedConfig& config,
                         const std::string& metric_id = "stratified");

}  // namespace perturbench

#endif  // PERTURBENCH_STRATIFIED_H_
