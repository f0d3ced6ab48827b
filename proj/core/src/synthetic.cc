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

#include "perturbench/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "perturbench/errors.h"
#include "perturbench/hashing.h"

namespace perturbench::synthetic {
namespace {

struct NamedColor {
  const char* name;
  Rgb color;
};

constexpr NamedColor kPairColors[] = {
    {"red", {235, 20, 20}},     {"green", {20, 235, 20}},
    {"blue", {20, 20, 235}},    {"yellow", {235, 235, 20}},
    {"cyan", {20, 235, 235}},   {"magenta", {235, 20, 235}},
    {"white", {235, 235, 235}},
};

// Partner colour: every channel moved 20 levels towards mid-grey.
Rgb Pale(Rgb c) {
  Rgb out;
  for (int i = 0; i < 3; ++i) out[i] = static_cast<uint8_t>(c[i] > 128 ? c[i] - 20 : c[i] + 20);
  return out;
}

uint8_t Noisy(int base, int delta) {
  return static_cast<uint8_t>(std::clamp(base + delta, 1, 255));
}

}  // namespace

void WorldSpec::Validate() const {
  if (grid_rows <= 0 || grid_cols <= 0 || patch_size <= 0) {
    throw ConstructionError("synthetic world needs a positive grid and patch size");
  }
  if (classes.size() < 2) throw ConstructionError("synthetic world needs >= 2 classes");
  if (fallback_class >= static_cast<int>(classes.size())) {
    throw ConstructionError("fallback class out of range");
  }
  for (const auto& c : classes) {
    for (int idx : c.region) {
      if (idx < 0 || idx >= grid_rows * grid_cols) {
        throw ConstructionError("class '" + c.name + "' region index " +
                                std::to_string(idx) + " outside the grid");
      }
    }
  }
  if (match_scale <= 0 || softmax_temperature <= 0 || noise < 0) {
    throw ConstructionError("invalid synthetic world parameters");
  }
}

WorldSpec StandardWorld(int num_pairs, uint64_t seed, bool ood_sensitive,
                        int region_rows, int region_cols) {
  constexpr int kMaxPairs = static_cast<int>(std::size(kPairColors));
  if (num_pairs < 1 || num_pairs > kMaxPairs) {
    throw ArgumentError("num_pairs must lie in [1, " + std::to_string(kMaxPairs) + "]");
  }
  WorldSpec spec;
  spec.ood_sensitive = ood_sensitive;
  if (region_rows < 1 || region_cols < 1 || region_rows > spec.grid_rows ||
      region_cols > spec.grid_cols) {
    throw ArgumentError("region does not fit the grid");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> top(0, spec.grid_rows - region_rows);
  std::uniform_int_distribution<int> left(0, spec.grid_cols - region_cols);
  for (int pair = 0; pair < num_pairs; ++pair) {
    const int r0 = top(rng);
    const int c0 = left(rng);
    std::vector<int> region;
    for (int r = r0; r < r0 + region_rows; ++r) {
      for (int c = c0; c < c0 + region_cols; ++c) region.push_back(r * spec.grid_cols + c);
    }
    const auto& base = kPairColors[pair];
    // With match_scale 40 and noise 2 the partner overtakes once ~77% of G
    // carries its template (between 15 and 16 of 20 patches).
    spec.classes.push_back({base.name, base.color, region, 1.43, true});
    spec.classes.push_back({std::string(base.name) + "_pale", Pale(base.color), region, 1.0, true});
  }
  spec.fallback_class = static_cast<int>(spec.classes.size());
  spec.classes.push_back({"void", spec.background, {}, 1.0, true});
  return spec;
}

nlohmann::json ToJson(const WorldSpec& spec) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : spec.classes) {
    classes.push_back({{"name", c.name},
                       {"color", c.color},
                       {"region", c.region},
                       {"gain", c.gain},
                       {"renderable", c.renderable}});
  }
  return {{"grid_rows", spec.grid_rows},
          {"grid_cols", spec.grid_cols},
          {"patch_size", spec.patch_size},
          {"classes", std::move(classes)},
          {"fallback_class", spec.fallback_class},
          {"fallback_logit", spec.fallback_logit},
          {"background", spec.background},
          {"noise", spec.noise},
          {"match_scale", spec.match_scale},
          {"softmax_temperature", spec.softmax_temperature},
          {"ood_sensitive", spec.ood_sensitive},
          {"ood_zero_fraction", spec.ood_zero_fraction},
          {"ood_logit", spec.ood_logit},
          {"noisy_attribution_scale", spec.noisy_attribution_scale}};
}

WorldSpec WorldSpecFromJson(const nlohmann::json& j) {
  WorldSpec spec;
  spec.grid_rows = j.value("grid_rows", spec.grid_rows);
  spec.grid_cols = j.value("grid_cols", spec.grid_cols);
  spec.patch_size = j.value("patch_size", spec.patch_size);
  for (const auto& c : j.at("classes")) {
    spec.classes.push_back({c.at("name").get<std::string>(), c.at("color").get<Rgb>(),
                            c.value("region", std::vector<int>{}), c.value("gain", 1.0),
                            c.value("renderable", true)});
  }
  spec.fallback_class = j.value("fallback_class", -1);
  spec.fallback_logit = j.value("fallback_logit", spec.fallback_logit);
  spec.background = j.value("background", spec.background);
  spec.noise = j.value("noise", spec.noise);
  spec.match_scale = j.value("match_scale", spec.match_scale);
  spec.softmax_temperature = j.value("softmax_temperature", spec.softmax_temperature);
  spec.ood_sensitive = j.value("ood_sensitive", spec.ood_sensitive);
  spec.ood_zero_fraction = j.value("ood_zero_fraction", spec.ood_zero_fraction);
  spec.ood_logit = j.value("ood_logit", spec.ood_logit);
  spec.noisy_attribution_scale =
      j.value("noisy_attribution_scale", spec.noisy_attribution_scale);
  return spec;
}

World::World(WorldSpec spec) : spec_(std::move(spec)) {
  spec_.Validate();
  const Shape shape = spec_.image_shape();
  for (const auto& c : spec_.classes) {
    names_.push_back(c.name);
    PixelMask mask(shape.height, shape.width);
    if (!c.region.empty()) {
      PatchMask patches(spec_.grid(), c.region,
                        static_cast<double>(c.region.size()) / spec_.grid().size(),
                        spec_.patch_size, shape);
      mask = ExpandMask(patches, shape);
    }
    std::vector<int> pixels;
    for (int y = 0; y < shape.height; ++y) {
      for (int x = 0; x < shape.width; ++x) {
        if (mask.get(y, x)) pixels.push_back(y * shape.width + x);
      }
    }
    region_masks_.push_back(std::move(mask));
    region_pixels_.push_back(std::move(pixels));
  }
}

int World::ClassByName(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

std::vector<int> World::DominantClasses() const {
  std::vector<int> out;
  for (int t = 0; t < num_classes(); ++t) {
    if (spec_.classes[t].gain > 1.0 && !spec_.classes[t].region.empty()) out.push_back(t);
  }
  return out;
}

double World::Match(uint8_t r, uint8_t g, uint8_t b, int cls) const {
  if (r == 0 && g == 0 && b == 0) return 0.0;
  const Rgb& t = spec_.classes[cls].color;
  const int l1 = std::abs(r - t[0]) + std::abs(g - t[1]) + std::abs(b - t[2]);
  return std::max(0.0, 1.0 - l1 / (3.0 * spec_.match_scale));
}

Image World::Render(int cls, uint64_t seed) const {
  const Shape shape = spec_.image_shape();
  Image image(shape.height, shape.width);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> noise(-spec_.noise, spec_.noise);
  const Rgb* region_color = cls >= 0 ? &spec_.classes[cls].color : nullptr;
  const PixelMask* region = cls >= 0 ? &region_masks_[cls] : nullptr;
  for (int y = 0; y < shape.height; ++y) {
    for (int x = 0; x < shape.width; ++x) {
      const Rgb& base =
          (region != nullptr && region->get(y, x)) ? *region_color : spec_.background;
      for (int ch = 0; ch < 3; ++ch) image.at(y, x, ch) = Noisy(base[ch], noise(rng));
    }
  }
  return image;
}

std::vector<double> World::Logits(const Image& image) const {
  if (image.shape() != spec_.image_shape()) {
    throw BackendError("oracle classifier expects " +
                       std::to_string(spec_.image_shape().height) + "x" +
                       std::to_string(spec_.image_shape().width) + " images");
  }
  const auto bytes = image.bytes();
  std::vector<double> logits(spec_.classes.size(), 0.0);
  for (int t = 0; t < num_classes(); ++t) {
    if (t == spec_.fallback_class) {
      logits[t] = spec_.fallback_logit;
      continue;
    }
    const auto& pixels = region_pixels_[t];
    if (pixels.empty()) continue;
    double sum = 0.0;
    for (int offset : pixels) {
      const size_t i = static_cast<size_t>(offset) * 3;
      sum += Match(bytes[i], bytes[i + 1], bytes[i + 2], t);
    }
    logits[t] = spec_.classes[t].gain * sum / static_cast<double>(pixels.size());
  }
  if (spec_.ood_sensitive && spec_.fallback_class >= 0) {
    int64_t zeros = 0;
    for (size_t i = 0; i < bytes.size(); i += 3) {
      zeros += (bytes[i] == 0 && bytes[i + 1] == 0 && bytes[i + 2] == 0) ? 1 : 0;
    }
    if (static_cast<double>(zeros) > spec_.ood_zero_fraction * image.shape().area()) {
      logits[spec_.fallback_class] = spec_.ood_logit;
    }
  }
  return logits;
}

std::vector<double> World::Probabilities(const Image& image) const {
  std::vector<double> p = Logits(image);
  const double top = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp((v - top) / spec_.softmax_temperature);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

OracleClassifier::OracleClassifier(std::shared_ptr<const World> world)
    : world_(std::move(world)) {}

std::string OracleClassifier::id() const {
  return world_->spec().ood_sensitive ? "oracle-classifier-ood" : "oracle-classifier";
}

int OracleClassifier::input_size() const { return world_->spec().image_shape().height; }

const std::vector<std::string>& OracleClassifier::class_names() const {
  return world_->class_names();
}

std::vector<double> OracleClassifier::Classify(const Image& image) const {
  return world_->Probabilities(image);
}

OracleInpainter::OracleInpainter(std::shared_ptr<const World> world)
    : world_(std::move(world)) {}

InpaintResult OracleInpainter::Inpaint(const Image& image, const PixelMask& keep_mask,
                                       const std::string& prompt, uint64_t seed) const {
  if (keep_mask.shape() != image.shape()) {
    throw ArgumentError("keep mask shape differs from the image shape");
  }
  const int cls = world_->ClassByName(prompt);
  if (cls < 0) throw BackendError("oracle inpainter cannot render '" + prompt + "'");
  InpaintResult result{image, "", false};
  const Rgb& color = world_->spec().classes[cls].color;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> noise(-world_->spec().noise, world_->spec().noise);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (keep_mask.get(y, x)) continue;
      for (int ch = 0; ch < 3; ++ch) {
        result.image.at(y, x, ch) = Noisy(color[ch], noise(rng));
      }
    }
  }
  return result;
}

GroundTruthAttributor::GroundTruthAttributor(std::shared_ptr<const World> world)
    : world_(std::move(world)) {}

RelevanceMap GroundTruthAttributor::Explain(const Classifier& classifier,
                                            const Image& image,
                                            std::optional<int> target_class) const {
  const int target = target_class ? *target_class : Top1(classifier.Classify(image));
  if (target < 0 || target >= world_->num_classes()) {
    throw AttributionError("target class out of range");
  }
  const PixelMask& region = world_->RegionMask(target);
  std::vector<double> values(region.bits().begin(), region.bits().end());
  return RelevanceMap::FromPixels(image.shape(), std::move(values), target, id());
}

NoisyGroundTruthAttributor::NoisyGroundTruthAttributor(std::shared_ptr<const World> world,
                                                       uint64_t seed)
    : world_(std::move(world)), seed_(seed) {}

RelevanceMap NoisyGroundTruthAttributor::Explain(const Classifier& classifier,
                                                 const Image& image,
                                                 std::optional<int> target_class) const {
  const int target = target_class ? *target_class : Top1(classifier.Classify(image));
  if (target < 0 || target >= world_->num_classes()) {
    throw AttributionError("target class out of range");
  }
  Sha256 h;
  h.Field(image.bytes()).Field(static_cast<uint64_t>(target)).Field(seed_);
  std::mt19937_64 rng(std::stoull(h.HexDigest().substr(0, 16), nullptr, 16));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& spec = world_->spec();
  std::vector<double> patch_noise(static_cast<size_t>(spec.grid().size()));
  for (double& v : patch_noise) v = spec.noisy_attribution_scale * unit(rng);

  const PixelMask& region = world_->RegionMask(target);
  const Shape shape = image.shape();
  std::vector<double> values(static_cast<size_t>(shape.area()));
  for (int y = 0; y < shape.height; ++y) {
    const int pr = std::min(y / spec.patch_size, spec.grid_rows - 1);
    for (int x = 0; x < shape.width; ++x) {
      const int pc = std::min(x / spec.patch_size, spec.grid_cols - 1);
      values[static_cast<size_t>(y) * shape.width + x] =
          (region.get(y, x) ? 1.0 : 0.0) + patch_noise[static_cast<size_t>(pr) * spec.grid_cols + pc];
    }
  }
  return RelevanceMap::FromPixels(shape, std::move(values), target, id());
}

OracleGenerator::OracleGenerator(std::shared_ptr<const World> world)
    : world_(std::move(world)) {}

Image OracleGenerator::Generate(const std::string& prompt, uint64_t seed) const {
  const int cls = world_->ClassByName(prompt);
  if (cls < 0) throw BackendError("oracle generator does not know '" + prompt + "'");
  const bool draw = world_->spec().classes[cls].renderable;
  return world_->Render(draw ? cls : -1, seed);
}

std::vector<EvalImage> MakeDataset(const World& world, int n_images, uint64_t seed) {
  if (n_images <= 0) throw ArgumentError("dataset needs at least one image");
  std::vector<int> classes = world.DominantClasses();
  if (classes.empty()) {
    for (int t = 0; t < world.num_classes(); ++t) {
      if (t != world.spec().fallback_class) classes.push_back(t);
    }
  }
  std::vector<EvalImage> out;
  for (int i = 0; i < n_images; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "syn-%04d", i);
    const int cls = classes[static_cast<size_t>(i) % classes.size()];
    out.push_back({id, world.Render(cls, DeriveSeed("dataset", seed, static_cast<uint64_t>(i)))});
  }
  return out;
}

}  // namespace perturbench::synthetic
