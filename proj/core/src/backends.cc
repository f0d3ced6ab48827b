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

#include "perturbench/backends.h"

#include <algorithm>
#include <mutex>

#include "perturbench/errors.h"

namespace perturbench {
namespace {

class SerializedClassifier final : public Classifier {
 public:
  explicit SerializedClassifier(std::shared_ptr<const Classifier> inner)
      : inner_(std::move(inner)) {}

  std::string id() const override { return inner_->id(); }
  std::string version() const override { return inner_->version(); }
  int input_size() const override { return inner_->input_size(); }
  const std::vector<std::string>& class_names() const override {
    return inner_->class_names();
  }
  std::vector<double> Classify(const Image& image) const override {
    std::lock_guard lock(mu_);
    return inner_->Classify(image);
  }

 private:
  std::shared_ptr<const Classifier> inner_;
  mutable std::mutex mu_;
};

class SerializedAttributor final : public Attributor {
 public:
  explicit SerializedAttributor(std::shared_ptr<const Attributor> inner)
      : inner_(std::move(inner)) {}

  std::string id() const override { return inner_->id(); }
  std::string version() const override { return inner_->version(); }
  bool class_specific() const override { return inner_->class_specific(); }
  RelevanceMap Explain(const Classifier& classifier, const Image& image,
                       std::optional<int> target_class) const override {
    std::lock_guard lock(mu_);
    return inner_->Explain(classifier, image, target_class);
  }

 private:
  std::shared_ptr<const Attributor> inner_;
  mutable std::mutex mu_;
};

}  // namespace

std::string ClassPrompt(const std::string& class_name) {
  const std::string first = class_name.substr(0, class_name.find(','));
  const size_t b = first.find_first_not_of(' ');
  if (b == std::string::npos) return class_name;
  return first.substr(b, first.find_last_not_of(' ') - b + 1);
}

int Top1(std::span<const double> scores) {
  if (scores.empty()) throw ArgumentError("empty score vector");
  // max_element returns the first maximum, i.e. the lowest index on ties.
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) -
                          scores.begin());
}

std::shared_ptr<const Classifier> MakeShareSafe(std::shared_ptr<const Classifier> c) {
  if (c->share_safe()) return c;
  return std::make_shared<SerializedClassifier>(std::move(c));
}

std::shared_ptr<const Attributor> MakeShareSafe(std::shared_ptr<const Attributor> a) {
  if (a->share_safe()) return a;
  return std::make_shared<SerializedAttributor>(std::move(a));
}

ThrottledInpainter::ThrottledInpainter(std::shared_ptr<const Inpainter> inner,
                                       int max_in_flight)
    : inner_(std::move(inner)), slots_(std::clamp(max_in_flight, 1, 1024)) {}

InpaintResult ThrottledInpainter::Inpaint(const Image& image,
                                          const PixelMask& keep_mask,
                                          const std::string& prompt,
                                          uint64_t seed) const {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};
  return inner_->Inpaint(image, keep_mask, prompt, seed);
}

}  // namespace perturbench
