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

#ifndef PERTURBENCH_SYNTHETIC_H_
#define PERTURBENCH_SYNTHETIC_H_

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturbench/backends.h"
#include "perturbench/mask.h"

// A closed synthetic system of classifier, inpainter, attributors and
// generator in which the correct behaviour of every metric is known by
// construction. Used for verification and smoke runs without model weights.
//
// Each class t owns a template colour and a ground-truth patch set G_t. The
// classifier's logit for t is gain_t times the mean template match over the
// pixels of G_t; a fallback class has a constant logit and wins when no class
// has evidence (e.g. after deletion). Classes come in pairs sharing G: the
// first member has gain > 1 so it is the top-1 of its rendered images and
// its partner is the top-2. Templates of different pairs do not match at
// all, so writing the partner's template over all of G is the only
// perturbation that makes the partner win.
namespace perturbench::synthetic {

using Rgb = std::array<uint8_t, 3>;

struct ClassSpec {
  std::string name;
  Rgb color{};
  std::vector<int> region;  // patch indices of G_t; empty for the fallback
  double gain = 1.0;
  bool renderable = true;  // generator can draw this class
};

struct WorldSpec {
  int grid_rows = 14;
  int grid_cols = 14;
  int patch_size = 16;
  std::vector<ClassSpec> classes;
  int fallback_class = -1;
  double fallback_logit = 0.15;
  Rgb background{128, 128, 128};
  int noise = 2;  // uniform per-channel noise amplitude
  // Template match is max(0, 1 - L1 / (3 * match_scale)); exact black
  // pixels carry no evidence.
  double match_scale = 40.0;
  double softmax_temperature = 0.05;
  // OOD-sensitive variant: the fallback wins whenever more than
  // ood_zero_fraction of the pixels are exactly black.
  bool ood_sensitive = false;
  double ood_zero_fraction = 0.05;
  double ood_logit = 10.0;
  double noisy_attribution_scale = 1.5;

  Shape image_shape() const {
    return {grid_rows * patch_size, grid_cols * patch_size};
  }
  GridShape grid() const { return {grid_rows, grid_cols}; }
  void Validate() const;
};

// `num_pairs` (1..7) class pairs sharing a region_rows x region_cols
// rectangle placed at a seeded random position, plus a fallback class
// "void". Pair members are named "<colour>" and "<colour>_pale".
WorldSpec StandardWorld(int num_pairs = 5, uint64_t seed = 7,
                        bool ood_sensitive = false, int region_rows = 4,
                        int region_cols = 5);

nlohmann::json ToJson(const WorldSpec& spec);
WorldSpec WorldSpecFromJson(const nlohmann::json& j);

class World {
 public:
  explicit World(WorldSpec spec);

  const WorldSpec& spec() const { return spec_; }
  int num_classes() const { return static_cast<int>(spec_.classes.size()); }
  const std::vector<std::string>& class_names() const { return names_; }
  // -1 when no class has that name.
  int ClassByName(const std::string& name) const;
  // Pixel footprint of G_t.
  const PixelMask& RegionMask(int cls) const { return region_masks_[cls]; }
  // Classes whose gain exceeds 1 (top-1 of their rendered images).
  std::vector<int> DominantClasses() const;

  // Background with seeded noise; G_cls painted with the class template
  // when cls >= 0.
  Image Render(int cls, uint64_t seed) const;
  std::vector<double> Logits(const Image& image) const;
  std::vector<double> Probabilities(const Image& image) const;
  double Match(uint8_t r, uint8_t g, uint8_t b, int cls) const;

 private:
  WorldSpec spec_;
  std::vector<std::string> names_;
  std::vector<PixelMask> region_masks_;
  std::vector<std::vector<int>> region_pixels_;  // flat pixel offsets
};

class OracleClassifier final : public Classifier {
 public:
  explicit OracleClassifier(std::shared_ptr<const World> world);

  std::string id() const override;
  int input_size() const override;
  const std::vector<std::string>& class_names() const override;
  std::vector<double> Classify(const Image& image) const override;

 private:
  std::shared_ptr<const World> world_;
};

// Repaints the non-kept pixels with the template of the class named by the
// prompt (plus seeded noise). An all-true keep mask returns the input
// unchanged.
class OracleInpainter final : public Inpainter {
 public:
  explicit OracleInpainter(std::shared_ptr<const World> world);

  std::string id() const override { return "oracle-inpainter"; }
  InpaintResult Inpaint(const Image& image, const PixelMask& keep_mask,
                        const std::string& prompt, uint64_t seed) const override;

 private:
  std::shared_ptr<const World> world_;
};

// Indicator of G_target at pixel resolution.
class GroundTruthAttributor final : public Attributor {
 public:
  explicit GroundTruthAttributor(std::shared_ptr<const World> world);

  std::string id() const override { return "ground_truth"; }
  bool class_specific() const override { return true; }
  RelevanceMap Explain(const Classifier& classifier, const Image& image,
                       std::optional<int> target_class) const override;

 private:
  std::shared_ptr<const World> world_;
};

// Ground truth plus patch-constant uniform noise in [0, scale), seeded by
// the image content, so the map changes when the image does.
class NoisyGroundTruthAttributor final : public Attributor {
 public:
  NoisyGroundTruthAttributor(std::shared_ptr<const World> world, uint64_t seed);

  std::string id() const override { return "noisy_ground_truth"; }
  bool class_specific() const override { return true; }
  RelevanceMap Explain(const Classifier& classifier, const Image& image,
                       std::optional<int> target_class) const override;

 private:
  std::shared_ptr<const World> world_;
  uint64_t seed_;
};

// Renders the class named by the prompt; unrenderable classes come out as
// plain background.
class OracleGenerator final : public Generator {
 public:
  explicit OracleGenerator(std::shared_ptr<const World> world);

  std::string id() const override { return "oracle-generator"; }
  Image Generate(const std::string& prompt, uint64_t seed) const override;

 private:
  std::shared_ptr<const World> world_;
};

// n images cycling over the dominant classes, ids "syn-0000", ...
std::vector<EvalImage> MakeDataset(const World& world, int n_images, uint64_t seed);

}  // namespace perturbench::synthetic

#endif  // PERTURBENCH_SYNTHETIC_H_
