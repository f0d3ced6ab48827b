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

#include "perturbench/stratified.h"

#include <algorithm>
#include <numeric>

#include <spdlog/spdlog.h>

#include "perturbench/errors.h"
#include "perturbench/hashing.h"
#include "perturbench/mask.h"
#include "perturbench/relevance.h"
#include "perturbench/weight.h"

namespace perturbench {
namespace {

RelevanceMap ExplainOrThrow(const Attributor& attributor, const Classifier& classifier,
                            const Image& image, int target) {
  try {
    RelevanceMap map = attributor.Explain(classifier, image, target);
    if (map.resolution() != Resolution::kPixel || map.image_shape() != image.shape()) {
      throw AttributionError("attributor '" + attributor.id() +
                             "' returned a map that does not match the image");
    }
    return map;
  } catch (const AttributionError&) {
    throw;
  } catch (const std::exception& e) {
    throw AttributionError("attributor '" + attributor.id() + "' failed: " + e.what());
  }
}

}  // namespace

std::string ToString(Granularity g) { return g == Granularity::kPixel ? "pixel" : "patch"; }

Granularity GranularityFromString(const std::string& s) {
  if (s == "patch") return Granularity::kPatch;
  if (s == "pixel") return Granularity::kPixel;
  throw ConfigError("granularity must be 'patch' or 'pixel', got '" + s + "'");
}

void StratifiedConfig::Validate() const {
  if (target_rank < 2) throw ConfigError("target_rank must be >= 2");
  if (steps.empty()) throw ConfigError("at least one perturbation step is required");
  for (size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i] > 0.0) || steps[i] > 0.5) {
      throw ConfigError("steps must lie in (0, 0.5]");
    }
    if (i > 0 && !(steps[i] > steps[i - 1])) {
      throw ConfigError("steps must be strictly increasing");
    }
  }
  if (patch_size < 1) throw ConfigError("patch_size must be >= 1");
  if (samples_per_step < 1) throw ConfigError("samples_per_step must be >= 1");
}

nlohmann::json ToJson(const StratifiedConfig& c) {
  return {{"target_rank", c.target_rank},
          {"apply_weighting", c.apply_weighting},
          {"granularity", ToString(c.granularity)},
          {"steps", c.steps},
          {"patch_size", c.patch_size},
          {"inpaint_seed", c.inpaint_seed},
          {"samples_per_step", c.samples_per_step}};
}

StratifiedConfig StratifiedConfigFromJson(const nlohmann::json& j) {
  StratifiedConfig c;
  c.target_rank = j.value("target_rank", c.target_rank);
  c.apply_weighting = j.value("apply_weighting", c.apply_weighting);
  c.granularity = GranularityFromString(j.value("granularity", ToString(c.granularity)));
  c.steps = j.value("steps", c.steps);
  c.patch_size = j.value("patch_size", c.patch_size);
  c.inpaint_seed = j.value("inpaint_seed", c.inpaint_seed);
  c.samples_per_step = j.value("samples_per_step", c.samples_per_step);
  c.Validate();
  return c;
}

int RankedClass(std::span<const double> scores, int rank) {
  if (rank < 1 || static_cast<size_t>(rank) > scores.size()) {
    throw ArgumentError("cannot take rank " + std::to_string(rank) + " of " +
                        std::to_string(scores.size()) + " classes");
  }
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + rank, order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return order[static_cast<size_t>(rank) - 1];
}

uint64_t InpaintSeed(const std::string& image_id, int step_index, uint64_t config_seed,
                     int sample) {
  return DeriveSeed("inpaint", image_id, config_seed,
                    (static_cast<uint64_t>(step_index) << 32) | static_cast<uint32_t>(sample));
}

ImageScore EvaluateImage(const EvalImage& image, const Classifier& classifier,
                         const Attributor& attributor, const Inpainter& inpainter,
                         const StratifiedConfig& config, const std::string& metric_id) {
  config.Validate();
  const Shape shape = image.image.shape();
  const std::vector<double> original_scores = classifier.Classify(image.image);
  const int top1 = Top1(original_scores);
  // Fixed from the original image for the whole sweep.
  const int target = RankedClass(original_scores, config.target_rank);
  const std::string prompt = ClassPrompt(classifier.class_names().at(static_cast<size_t>(target)));
  const int patch_size = config.effective_patch_size();

  const RelevanceMap relevance =
      DownsampleToPatches(ExplainOrThrow(attributor, classifier, image.image, top1), patch_size);
  std::optional<RelevanceMap> target_relevance;
  if (config.apply_weighting) {
    target_relevance = DownsampleToPatches(
        ExplainOrThrow(attributor, classifier, image.image, target), patch_size);
  }

  ImageScore out;
  out.image_id = image.id;
  out.method_id = attributor.id();
  out.metric_id = metric_id;
  out.steps = config.steps;
  out.class_agnostic = !attributor.class_specific();

  for (size_t s = 0; s < config.steps.size(); ++s) {
    const double p = config.steps[s];
    const PatchMask mask = TopPSelect(relevance, p);
    const PixelMask keep = ExpandMask(mask, shape).inverted();

    StepDetail detail{p, target, {}};
    double sum = 0.0;
    int ok = 0;
    for (int sample = 0; sample < config.samples_per_step; ++sample) {
      SampleDetail sd;
      sd.seed = InpaintSeed(image.id, static_cast<int>(s), config.inpaint_seed, sample);
      InpaintResult inpainted;
      try {
        inpainted = inpainter.Inpaint(image.image, keep, prompt, sd.seed);
        if (inpainted.image.shape() != shape) {
          throw BackendError("inpainter changed the image size");
        }
      } catch (const std::exception& e) {
        sd.error = e.what();
        spdlog::warn("inpainting failed for image {} step {}: {}", image.id, p, sd.error);
        detail.samples.push_back(std::move(sd));
        continue;
      }
      sd.inpaint_cache_key = inpainted.cache_key;
      const int predicted = Top1(classifier.Classify(inpainted.image));
      sd.predicted_class_after = predicted;
      double score = 0.0;
      if (predicted == target) {
        if (config.apply_weighting) {
          const RelevanceMap after = DownsampleToPatches(
              ExplainOrThrow(attributor, classifier, inpainted.image, target), patch_size);
          const Ratio w = CausalWeight({relevance.size(), mask.selected(),
                                        TopPSelect(*target_relevance, p).selected(),
                                        TopPSelect(after, p).selected()});
          score = w.value();
        } else {
          score = 1.0;
        }
        sd.weight = score;
      }
      sum += score;
      ++ok;
      detail.samples.push_back(std::move(sd));
    }
    out.scores.push_back(ok > 0 ? std::optional<double>(sum / ok) : std::nullopt);
    out.per_step.push_back(std::move(detail));
  }
  return out;
}

}  // namespace perturbench
