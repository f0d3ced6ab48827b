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

#ifndef PERTURBENCH_BASELINES_H_
#define PERTURBENCH_BASELINES_H_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturbench/backends.h"
#include "perturbench/score.h"
#include "perturbench/stratified.h"

namespace perturbench {

enum class PerturbationType { kDelete, kBlur, kChannelMean };
enum class MeanScope { kPerImage, kDataset };

using ChannelMeans = std::array<double, 3>;

struct PerturbationKind {
  PerturbationType type = PerturbationType::kDelete;
  int blur_kernel_size = 11;
  double blur_sigma = 5.0;
  MeanScope mean_scope = MeanScope::kPerImage;
  // Required when mean_scope is kDataset.
  std::optional<ChannelMeans> dataset_mean;

  void Validate() const;
  // "delete", "blur" or "mean".
  std::string metric_id() const;
};

nlohmann::json ToJson(const PerturbationKind& kind);
PerturbationKind PerturbationKindFromJson(const nlohmann::json& j, PerturbationType type);

ChannelMeans ChannelMean(const Image& image);
ChannelMeans DatasetChannelMean(std::span<const EvalImage> images);

// Replaces the masked pixels:
//   delete        -> 0 in every channel
//   blur          -> the Gaussian-blurred original (blurred as a whole,
//                    then composited under the mask)
//   channel mean  -> the per-channel mean, rounded half up
// Unmasked pixels are copied bit for bit.
Image Perturb(const Image& image, const PixelMask& mask, const PerturbationKind& kind);

struct CurveOptions {
  std::vector<double> steps = kDefaultSteps;
  int patch_size = 16;
  Granularity granularity = Granularity::kPatch;

  int effective_patch_size() const {
    return granularity == Granularity::kPixel ? 1 : patch_size;
  }
};

// Scores 1 at a step when perturbing the top-p cells moves the top-1
// prediction to any other class.
ImageScore BaselineCurve(const EvalImage& image, const Classifier& classifier,
                         const Attributor& attributor, const PerturbationKind& kind,
                         const CurveOptions& options);

// Scores 1 at a step when deleting the top-p cells strictly lowers the
// confidence of the original top-1 class.
ImageScore ViolationCurve(const EvalImage& image, const Classifier& classifier,
                          const Attributor& attributor, const CurveOptions& options);

// Scores 1 at a step when the classifier, applied to the bounding rectangle
// of the top-p cells resized to its input size, keeps the original top-1.
ImageScore SaliencyCurve(const EvalImage& image, const Classifier& classifier,
                         const Attributor& attributor, const CurveOptions& options);

// Smallest rectangle containing every set pixel; ArgumentError if none is.
Rect BoundingRect(const PixelMask& mask);

// Random relevance: a seeded uniform permutation of cell ranks over the
// patch grid of the image, constant within each patch. The same seed always
// yields the same map; the image content is ignored.
class RandomAttributor final : public Attributor {
 public:
  RandomAttributor(uint64_t seed, int patch_size);

  std::string id() const override { return "random"; }
  bool class_specific() const override { return false; }
  RelevanceMap Explain(const Classifier& classifier, const Image& image,
                       std::optional<int> target_class) const override;

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  int patch_size_;
};

}  // namespace perturbench

#endif  // PERTURBENCH_BASELINES_H_
