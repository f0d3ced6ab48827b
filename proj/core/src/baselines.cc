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

#include "perturbench/baselines.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "perturbench/errors.h"
#include "perturbench/mask.h"
#include "perturbench/relevance.h"

namespace perturbench {
namespace {

// Pixel mask of the top-p cells of the attributor's top-1 map.
struct Selection {
  PatchMask mask;
  PixelMask pixels;
};

class MaskSchedule {
 public:
  MaskSchedule(const EvalImage& image, const Classifier& classifier,
               const Attributor& attributor, const CurveOptions& options, int top1)
      : shape_(image.image.shape()),
        relevance_(DownsampleToPatches(Explain(attributor, classifier, image.image, top1),
                                       options.effective_patch_size())) {}

  Selection At(double p) const {
    PatchMask mask = TopPSelect(relevance_, p);
    PixelMask pixels = ExpandMask(mask, shape_);
    return {std::move(mask), std::move(pixels)};
  }

 private:
  static RelevanceMap Explain(const Attributor& attributor, const Classifier& classifier,
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

  Shape shape_;
  RelevanceMap relevance_;
};

ImageScore NewScore(const EvalImage& image, const Attributor& attributor,
                    const std::string& metric_id, const CurveOptions& options) {
  ImageScore out;
  out.image_id = image.id;
  out.method_id = attributor.id();
  out.metric_id = metric_id;
  out.steps = options.steps;
  out.class_agnostic = !attributor.class_specific();
  return out;
}

void ValidateSteps(const std::vector<double>& steps) {
  if (steps.empty()) throw ArgumentError("at least one perturbation step is required");
}

uint8_t RoundHalfUp(double v) {
  return static_cast<uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

void PerturbationKind::Validate() const {
  if (type == PerturbationType::kBlur) {
    if (blur_kernel_size < 3 || blur_kernel_size % 2 == 0) {
      throw ConfigError("blur kernel size must be odd and >= 3");
    }
    if (!(blur_sigma > 0.0)) throw ConfigError("blur sigma must be positive");
  }
  if (type == PerturbationType::kChannelMean && mean_scope == MeanScope::kDataset &&
      !dataset_mean) {
    throw ConfigError("dataset-scope channel mean needs precomputed dataset means");
  }
}

std::string PerturbationKind::metric_id() const {
  switch (type) {
    case PerturbationType::kDelete:
      return "delete";
    case PerturbationType::kBlur:
      return "blur";
    case PerturbationType::kChannelMean:
      return "mean";
  }
  return "unknown";
}

nlohmann::json ToJson(const PerturbationKind& kind) {
  nlohmann::json j = {{"kind", kind.metric_id()}};
  if (kind.type == PerturbationType::kBlur) {
    j["blur_kernel_size"] = kind.blur_kernel_size;
    j["blur_sigma"] = kind.blur_sigma;
  }
  if (kind.type == PerturbationType::kChannelMean) {
    j["mean_scope"] = kind.mean_scope == MeanScope::kDataset ? "dataset" : "per_image";
    if (kind.dataset_mean) j["dataset_mean"] = *kind.dataset_mean;
  }
  return j;
}

PerturbationKind PerturbationKindFromJson(const nlohmann::json& j, PerturbationType type) {
  PerturbationKind kind;
  kind.type = type;
  kind.blur_kernel_size = j.value("blur_kernel_size", kind.blur_kernel_size);
  kind.blur_sigma = j.value("blur_sigma", kind.blur_sigma);
  const std::string scope = j.value("mean_scope", std::string("per_image"));
  if (scope == "per_image") {
    kind.mean_scope = MeanScope::kPerImage;
  } else if (scope == "dataset") {
    kind.mean_scope = MeanScope::kDataset;
  } else {
    throw ConfigError("mean_scope must be 'per_image' or 'dataset'");
  }
  if (j.contains("dataset_mean")) kind.dataset_mean = j.at("dataset_mean").get<ChannelMeans>();
  return kind;
}

ChannelMeans ChannelMean(const Image& image) {
  std::array<uint64_t, 3> sum{};
  const auto bytes = image.bytes();
  for (size_t i = 0; i < bytes.size(); i += 3) {
    for (int c = 0; c < 3; ++c) sum[c] += bytes[i + c];
  }
  const auto n = static_cast<double>(image.shape().area());
  return {sum[0] / n, sum[1] / n, sum[2] / n};
}

ChannelMeans DatasetChannelMean(std::span<const EvalImage> images) {
  if (images.empty()) throw ArgumentError("dataset mean of an empty dataset");
  std::array<double, 3> sum{};
  double pixels = 0.0;
  for (const auto& e : images) {
    const ChannelMeans m = ChannelMean(e.image);
    const auto n = static_cast<double>(e.image.shape().area());
    for (int c = 0; c < 3; ++c) sum[c] += m[c] * n;
    pixels += n;
  }
  return {sum[0] / pixels, sum[1] / pixels, sum[2] / pixels};
}

Image Perturb(const Image& image, const PixelMask& mask, const PerturbationKind& kind) {
  if (mask.shape() != image.shape()) {
    throw ArgumentError("mask shape differs from the image shape");
  }
  kind.Validate();
  Image out = image;
  switch (kind.type) {
    case PerturbationType::kDelete: {
      for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
          if (!mask.get(y, x)) continue;
          for (int c = 0; c < 3; ++c) out.at(y, x, c) = 0;
        }
      }
      break;
    }
    case PerturbationType::kChannelMean: {
      const ChannelMeans mean =
          kind.mean_scope == MeanScope::kDataset ? *kind.dataset_mean : ChannelMean(image);
      const std::array<uint8_t, 3> fill{RoundHalfUp(mean[0]), RoundHalfUp(mean[1]),
                                        RoundHalfUp(mean[2])};
      for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
          if (!mask.get(y, x)) continue;
          for (int c = 0; c < 3; ++c) out.at(y, x, c) = fill[c];
        }
      }
      break;
    }
    case PerturbationType::kBlur: {
      const cv::Mat src(image.height(), image.width(), CV_8UC3,
                        const_cast<uint8_t*>(image.bytes().data()));
      cv::Mat blurred;
      cv::GaussianBlur(src, blurred, cv::Size(kind.blur_kernel_size, kind.blur_kernel_size),
                       kind.blur_sigma, kind.blur_sigma, cv::BORDER_REFLECT_101);
      for (int y = 0; y < image.height(); ++y) {
        const auto* row = blurred.ptr<uint8_t>(y);
        for (int x = 0; x < image.width(); ++x) {
          if (!mask.get(y, x)) continue;
          for (int c = 0; c < 3; ++c) out.at(y, x, c) = row[x * 3 + c];
        }
      }
      break;
    }
  }
  return out;
}

Rect BoundingRect(const PixelMask& mask) {
  int top = mask.height(), left = mask.width(), bottom = -1, right = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.get(y, x)) continue;
      top = std::min(top, y);
      bottom = std::max(bottom, y);
      left = std::min(left, x);
      right = std::max(right, x);
    }
  }
  if (bottom < 0) throw ArgumentError("bounding rectangle of an empty mask");
  return {top, left, bottom - top + 1, right - left + 1};
}

ImageScore BaselineCurve(const EvalImage& image, const Classifier& classifier,
                         const Attributor& attributor, const PerturbationKind& kind,
                         const CurveOptions& options) {
  ValidateSteps(options.steps);
  kind.Validate();
  const int top1 = Top1(classifier.Classify(image.image));
  const MaskSchedule schedule(image, classifier, attributor, options, top1);
  ImageScore out = NewScore(image, attributor, kind.metric_id(), options);
  for (double p : options.steps) {
    const Selection sel = schedule.At(p);
    const int predicted = Top1(classifier.Classify(Perturb(image.image, sel.pixels, kind)));
    SampleDetail sd;
    sd.predicted_class_after = predicted;
    out.scores.push_back(predicted != top1 ? 1.0 : 0.0);
    out.per_step.push_back({p, top1, {sd}});
  }
  return out;
}

ImageScore ViolationCurve(const EvalImage& image, const Classifier& classifier,
                          const Attributor& attributor, const CurveOptions& options) {
  ValidateSteps(options.steps);
  const std::vector<double> original = classifier.Classify(image.image);
  const int top1 = Top1(original);
  const MaskSchedule schedule(image, classifier, attributor, options, top1);
  PerturbationKind deletion;
  deletion.type = PerturbationType::kDelete;
  ImageScore out = NewScore(image, attributor, "violation", options);
  for (double p : options.steps) {
    const Selection sel = schedule.At(p);
    const std::vector<double> after =
        classifier.Classify(Perturb(image.image, sel.pixels, deletion));
    SampleDetail sd;
    sd.predicted_class_after = Top1(after);
    sd.confidence_after = after.at(static_cast<size_t>(top1));
    out.scores.push_back(after[static_cast<size_t>(top1)] < original[static_cast<size_t>(top1)]
                             ? 1.0
                             : 0.0);
    out.per_step.push_back({p, top1, {sd}});
  }
  return out;
}

ImageScore SaliencyCurve(const EvalImage& image, const Classifier& classifier,
                         const Attributor& attributor, const CurveOptions& options) {
  ValidateSteps(options.steps);
  const int top1 = Top1(classifier.Classify(image.image));
  const MaskSchedule schedule(image, classifier, attributor, options, top1);
  const Shape input{classifier.input_size(), classifier.input_size()};
  ImageScore out = NewScore(image, attributor, "saliency", options);
  for (double p : options.steps) {
    const Selection sel = schedule.At(p);
    const Image crop = ResizeBilinear(Crop(image.image, BoundingRect(sel.pixels)), input);
    const int predicted = Top1(classifier.Classify(crop));
    SampleDetail sd;
    sd.predicted_class_after = predicted;
    out.scores.push_back(predicted == top1 ? 1.0 : 0.0);
    out.per_step.push_back({p, top1, {sd}});
  }
  return out;
}

RandomAttributor::RandomAttributor(uint64_t seed, int patch_size)
    : seed_(seed), patch_size_(patch_size) {
  if (patch_size < 1) throw ArgumentError("patch size must be >= 1");
}

RelevanceMap RandomAttributor::Explain(const Classifier& classifier, const Image& image,
                                       std::optional<int> target_class) const {
  const Shape shape = image.shape();
  const int rows = (shape.height + patch_size_ - 1) / patch_size_;
  const int cols = (shape.width + patch_size_ - 1) / patch_size_;
  std::vector<double> ranks(static_cast<size_t>(rows) * cols);
  std::iota(ranks.begin(), ranks.end(), 0.0);
  std::mt19937_64 rng(seed_);
  std::shuffle(ranks.begin(), ranks.end(), rng);

  std::vector<double> values(static_cast<size_t>(shape.area()));
  for (int y = 0; y < shape.height; ++y) {
    const size_t row = static_cast<size_t>(y / patch_size_) * cols;
    for (int x = 0; x < shape.width; ++x) {
      values[static_cast<size_t>(y) * shape.width + x] = ranks[row + x / patch_size_];
    }
  }
  const int target = target_class ? *target_class : Top1(classifier.Classify(image));
  return RelevanceMap::FromPixels(shape, std::move(values), target, id());
}

}  // namespace perturbench
