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

#include "perturbench/mask.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "perturbench/errors.h"

namespace perturbench {

int SelectionCount(double p, int n) {
  if (!(p > 0.0) || p > 1.0) {
    throw ArgumentError("perturbation fraction must lie in (0, 1], got " +
                        std::to_string(p));
  }
  return static_cast<int>(std::floor(p * n + 0.5 + 1e-9));
}

PatchMask::PatchMask(GridShape grid, std::vector<int> selected, double p,
                     int patch_size, Shape image_shape)
    : grid_(grid),
      selected_(std::move(selected)),
      p_(p),
      patch_size_(patch_size),
      image_shape_(image_shape) {
  if (grid.rows <= 0 || grid.cols <= 0 || patch_size < 1) {
    throw ConstructionError("invalid patch grid");
  }
  std::sort(selected_.begin(), selected_.end());
  if (std::adjacent_find(selected_.begin(), selected_.end()) != selected_.end()) {
    throw ConstructionError("patch mask has duplicate indices");
  }
  if (!selected_.empty() && (selected_.front() < 0 || selected_.back() >= grid.size())) {
    throw ConstructionError("patch index out of range");
  }
  if (static_cast<int>(selected_.size()) != SelectionCount(p, grid.size())) {
    throw ConstructionError("patch mask cardinality does not match p");
  }
}

bool PatchMask::contains(int index) const {
  return std::binary_search(selected_.begin(), selected_.end(), index);
}

PatchMask TopPSelect(const RelevanceMap& patch_map, double p) {
  if (patch_map.resolution() != Resolution::kPatch) {
    throw ArgumentError("top-p selection expects a patch-resolution map");
  }
  const int n = patch_map.size();
  const int k = SelectionCount(p, n);
  if (k == 0) {
    throw ArgumentError("p = " + std::to_string(p) + " selects no cell of a " +
                        std::to_string(n) + "-cell grid");
  }
  const auto values = patch_map.values();
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&values](int a, int b) {
                      if (values[a] != values[b]) return values[a] > values[b];
                      return a < b;
                    });
  order.resize(static_cast<size_t>(k));
  return PatchMask({patch_map.rows(), patch_map.cols()}, std::move(order), p,
                   patch_map.patch_size(), patch_map.image_shape());
}

Rect PatchRect(int index, GridShape grid, int patch_size, Shape image_shape) {
  const int r = index / grid.cols;
  const int c = index % grid.cols;
  Rect rect{r * patch_size, c * patch_size, patch_size, patch_size};
  rect.height = std::min(rect.height, image_shape.height - rect.top);
  rect.width = std::min(rect.width, image_shape.width - rect.left);
  return rect;
}

PixelMask ExpandMask(const PatchMask& mask, Shape image_shape) {
  const GridShape grid = mask.grid();
  const int ps = mask.patch_size();
  if ((image_shape.height + ps - 1) / ps != grid.rows ||
      (image_shape.width + ps - 1) / ps != grid.cols) {
    throw ArgumentError("patch grid is inconsistent with the image shape");
  }
  PixelMask out(image_shape.height, image_shape.width);
  for (int index : mask.selected()) {
    const Rect rect = PatchRect(index, grid, ps, image_shape);
    for (int y = rect.top; y < rect.bottom(); ++y) {
      for (int x = rect.left; x < rect.right(); ++x) out.set(y, x, true);
    }
  }
  return out;
}

nlohmann::json ToJson(const PatchMask& mask) {
  return {
      {"rows", mask.grid().rows},
      {"cols", mask.grid().cols},
      {"patch_size", mask.patch_size()},
      {"image_height", mask.image_shape().height},
      {"image_width", mask.image_shape().width},
      {"p", mask.p()},
      {"selected", mask.selected()},
  };
}

PatchMask PatchMaskFromJson(const nlohmann::json& j) {
  return PatchMask({j.at("rows").get<int>(), j.at("cols").get<int>()},
                   j.at("selected").get<std::vector<int>>(),
                   j.at("p").get<double>(), j.at("patch_size").get<int>(),
                   {j.at("image_height").get<int>(), j.at("image_width").get<int>()});
}

}  // namespace perturbench
