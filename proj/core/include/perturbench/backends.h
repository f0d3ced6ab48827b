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

#ifndef PERTURBENCH_BACKENDS_H_
#define PERTURBENCH_BACKENDS_H_

#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturbench/image.h"
#include "perturbench/relevance.h"

namespace perturbench {

struct EvalImage {
  std::string id;
  Image image;
};

// An image classifier C. Images arrive as 8-bit RGB at input_size x
// input_size; any model-specific normalisation happens inside the adapter.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string id() const = 0;
  virtual std::string version() const { return "1"; }
  virtual int input_size() const = 0;
  virtual const std::vector<std::string>& class_names() const = 0;
  // One score per class; higher is more confident.
  virtual std::vector<double> Classify(const Image& image) const = 0;
  // False when concurrent Classify calls are unsafe.
  virtual bool share_safe() const { return true; }
};

// An attribution method E producing pixel-resolution relevance maps.
class Attributor {
 public:
  virtual ~Attributor() = default;

  virtual std::string id() const = 0;
  virtual std::string version() const { return "1"; }
  // Class-specific methods honour `target_class`; the others return the same
  // map whatever class is requested.
  virtual bool class_specific() const = 0;
  // Explains `target_class`, or the classifier's top-1 class when absent.
  virtual RelevanceMap Explain(const Classifier& classifier, const Image& image,
                               std::optional<int> target_class) const = 0;
  virtual bool share_safe() const { return true; }
};

struct InpaintResult {
  Image image;
  // Content-address of the persisted result; empty for uncached engines.
  std::string cache_key;
  bool cache_hit = false;
};

// Text-conditioned inpainting engine. `keep_mask` is true on pixels to keep
// and false on the region to repaint.
class Inpainter {
 public:
  virtual ~Inpainter() = default;

  virtual std::string id() const = 0;
  virtual std::string version() const { return "1"; }
  // Engine parameters that influence the output (guidance scale, ...).
  virtual nlohmann::json parameters() const { return nlohmann::json::object(); }
  virtual InpaintResult Inpaint(const Image& image, const PixelMask& keep_mask,
                                const std::string& prompt, uint64_t seed) const = 0;
};

// Text-to-image generator used for class-set curation.
class Generator {
 public:
  virtual ~Generator() = default;

  virtual std::string id() const = 0;
  virtual std::string version() const { return "1"; }
  virtual Image Generate(const std::string& prompt, uint64_t seed) const = 0;
};

// Index of the highest score; ties resolve to the lowest index.
int Top1(std::span<const double> scores);

// Text prompt for a class: the first of comma-separated synonyms, trimmed
// ("tench, Tinca tinca" -> "tench").
std::string ClassPrompt(const std::string& class_name);

// Wraps a classifier that is not share-safe so calls are serialised; returns
// the input unchanged otherwise.
std::shared_ptr<const Classifier> MakeShareSafe(std::shared_ptr<const Classifier> c);
std::shared_ptr<const Attributor> MakeShareSafe(std::shared_ptr<const Attributor> a);

// Caps the number of in-flight Inpaint calls across threads.
class ThrottledInpainter final : public Inpainter {
 public:
  ThrottledInpainter(std::shared_ptr<const Inpainter> inner, int max_in_flight);

  std::string id() const override { return inner_->id(); }
  std::string version() const override { return inner_->version(); }
  nlohmann::json parameters() const override { return inner_->parameters(); }
  InpaintResult Inpaint(const Image& image, const PixelMask& keep_mask,
                        const std::string& prompt, uint64_t seed) const override;

 private:
  std::shared_ptr<const Inpainter> inner_;
  mutable std::counting_semaphore<1024> slots_;
};

}  // namespace perturbench

#endif  // PERTURBENCH_BACKENDS_H_
