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

#ifndef PERTURBENCH_MASK_H_
#define PERTURBENCH_MASK_H_

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "perturbench/image.h"
#include "perturbench/relevance.h"

namespace perturbench {

struct GridShape {
  int rows = 0;
  int cols = 0;

  int size() const { return rows * cols; }
  bool operator==(const GridShape&) const = default;
};

// Number of cells selected for a perturbation fraction p of n cells:
// round-half-up(p * n). A 1e-9 slack absorbs binary representation error,
// so 0.3 * 5 counts as exactly 1.5.
int SelectionCount(double p, int n);

// Patches chosen for perturbation at one step. `selected` is kept sorted
// ascending; it is a set, the selection order is not retained.
class PatchMask {
 public:
  PatchMask(GridShape grid, std::vector<int> selected, double p,
            int patch_size, Shape image_shape);

  GridShape grid() const { return grid_; }
  const std::vector<int>& selected() const { return selected_; }
  double p() const { return p_; }
  int patch_size() const { return patch_size_; }
  Shape image_shape() const { return image_shape_; }
  bool contains(int index) const;

  bool operator==(const PatchMask&) const = default;

 private:
  GridShape grid_;
  std::vector<int> selected_;
  double p_;
  int patch_size_;
  Shape image_shape_;
};

// The SelectionCount(p, n) highest-relevance cells of a patch map. Equal
// values are ordered by ascending row-major index.
PatchMask TopPSelect(const RelevanceMap& patch_map, double p);

// Pixel footprint of the selected patches; patches on the right and bottom
// edges are clipped to the image when it is not a multiple of patch_size.
PixelMask ExpandMask(const PatchMask& mask, Shape image_shape);

// Clipped pixel rectangle covered by one patch.
Rect PatchRect(int index, GridShape grid, int patch_size, Shape image_shape);

nlohmann::json ToJson(const PatchMask& mask);
PatchMask PatchMaskFromJson(const nlohmann::json& j);

}  // namespace perturbench

#endif  // PERTURBENCH_MASK_H_
