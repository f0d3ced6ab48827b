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

#include "perturbench/relevance.h"

#include <algorithm>
#include <cmath>

#include "perturbench/errors.h"

namespace perturbench {
namespace {

int CeilDiv(int a, int b) { return (a + b - 1) / b; }

}  // namespace

RelevanceMap::RelevanceMap(int rows, int cols, std::vector<double> values,
                           Resolution resolution, int patch_size,
                           Shape image_shape, int target_class,
                           std::string source)
    : rows_(rows),
      cols_(cols),
      values_(std::move(values)),
      resolution_(resolution),
      patch_size_(patch_size),
      image_shape_(image_shape),
      target_class_(target_class),
      source_(std::move(source)) {
  if (rows <= 0 || cols <= 0) {
    throw ConstructionError("relevance map dimensions must be positive");
  }
  if (values_.size() != static_cast<size_t>(rows) * cols) {
    throw ConstructionError("relevance map has " + std::to_string(values_.size()) +
                            " values for a " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " grid");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw ConstructionError("relevance map contains a non-finite value");
    }
  }
  if (patch_size < 1) throw ConstructionError("patch size must be >= 1");
  if (resolution == Resolution::kPixel) {
    if (patch_size != 1 || image_shape != Shape{rows, cols}) {
      throw ConstructionError("pixel map must match its image shape");
    }
  } else if (rows != CeilDiv(image_shape.height, patch_size) ||
             cols != CeilDiv(image_shape.width, patch_size)) {
    throw ConstructionError("patch grid does not match ceil(image / patch_size)");
  }
}

RelevanceMap RelevanceMap::FromPixels(Shape shape, std::vector<double> values,
                                      int target_class, std::string source) {
  return RelevanceMap(shape.height, shape.width, std::move(values),
                      Resolution::kPixel, 1, shape, target_class,
                      std::move(source));
}

RelevanceMap DownsampleToPatches(const RelevanceMap& map, int patch_size) {
  if (map.resolution() != Resolution::kPixel) {
    throw ArgumentError("downsampling expects a pixel-resolution map");
  }
  if (patch_size < 1) throw ArgumentError("patch size must be >= 1");
  if (patch_size > map.rows() || patch_size > map.cols()) {
    throw ArgumentError("patch size " + std::to_string(patch_size) +
                        " exceeds image dimensions");
  }
  const int out_rows = CeilDiv(map.rows(), patch_size);
  const int out_cols = CeilDiv(map.cols(), patch_size);

  // Per-axis source index pair and interpolation weight.
  struct Tap {
    int lo;
    int hi;
    double frac;
  };
  auto taps = [patch_size](int out_n, int in_n) {
    std::vector<Tap> t(static_cast<size_t>(out_n));
    for (int i = 0; i < out_n; ++i) {
      double src = (i + 0.5) * patch_size - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in_n - 1));
      const int lo = static_cast<int>(std::floor(src));
      const int hi = std::min(lo + 1, in_n - 1);
      t[static_cast<size_t>(i)] = {lo, hi, src - lo};
    }
    return t;
  };
  const auto ty = taps(out_rows, map.rows());
  const auto tx = taps(out_cols, map.cols());

  std::vector<double> out(static_cast<size_t>(out_rows) * out_cols);
  for (int r = 0; r < out_rows; ++r) {
    const Tap& y = ty[static_cast<size_t>(r)];
    for (int c = 0; c < out_cols; ++c) {
      const Tap& x = tx[static_cast<size_t>(c)];
      const double top = (1.0 - x.frac) * map.at(y.lo, x.lo) + x.frac * map.at(y.lo, x.hi);
      const double bottom = (1.0 - x.frac) * map.at(y.hi, x.lo) + x.frac * map.at(y.hi, x.hi);
      out[static_cast<size_t>(r) * out_cols + c] = (1.0 - y.frac) * top + y.frac * bottom;
    }
  }
  return RelevanceMap(out_rows, out_cols, std::move(out), Resolution::kPatch,
                      patch_size, map.image_shape(), map.target_class(),
                      map.source());
}

}  // namespace perturbench
