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

#ifndef PERTURBENCH_RELEVANCE_H_
#define PERTURBENCH_RELEVANCE_H_

#include <span>
#include <string>
#include <vector>

#include "perturbench/image.h"

namespace perturbench {

enum class Resolution { kPixel, kPatch };

// Relevance scores for one image and one class, either per pixel or per
// square patch. For patch maps, `image_shape` is the shape of the image the
// map was derived from and the grid is ceil(image_dim / patch_size) per axis.
class RelevanceMap {
 public:
  RelevanceMap(int rows, int cols, std::vector<double> values,
               Resolution resolution, int patch_size, Shape image_shape,
               int target_class, std::string source);

  static RelevanceMap FromPixels(Shape shape, std::vector<double> values,
                                 int target_class, std::string source);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  double at(int r, int c) const { return values_[static_cast<size_t>(r) * cols_ + c]; }
  std::span<const double> values() const { return values_; }

  Resolution resolution() const { return resolution_; }
  int patch_size() const { return patch_size_; }
  Shape image_shape() const { return image_shape_; }
  int target_class() const { return target_class_; }
  const std::string& source() const { return source_; }

  bool operator==(const RelevanceMap&) const = default;

 private:
  int rows_;
  int cols_;
  std::vector<double> values_;
  Resolution resolution_;
  int patch_size_;
  Shape image_shape_;
  int target_class_;
  std::string source_;
};

// Bilinear resampling with scale factor 1/patch_size using the half-pixel
// (align_corners = false) convention: output cell (r, c) samples the input
// at ((r + 0.5) * patch_size - 0.5, (c + 0.5) * patch_size - 0.5), clamped to
// the image. No antialiasing, so for an even patch size each output value
// is the mean of the 2x2 pixels straddling the patch centre.
RelevanceMap DownsampleToPatches(const RelevanceMap& map, int patch_size);

}  // namespace perturbench

#endif  // PERTURBENCH_RELEVANCE_H_
