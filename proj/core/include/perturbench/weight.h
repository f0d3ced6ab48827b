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

#ifndef PERTURBENCH_WEIGHT_H_
#define PERTURBENCH_WEIGHT_H_

#include <cstdint>
#include <vector>

namespace perturbench {

// Cell-index sets entering the causal weighting, all over a grid of
// `universe` cells (patches, or pixels for pixel-granularity runs).
struct WeightInputs {
  int universe = 0;
  // Cells rewritten by the inpainter.
  std::vector<int> modified;
  // Top-p cells of the original image's relevance for the target class.
  std::vector<int> top_original_target;
  // Top-p cells of the inpainted image's relevance for the target class.
  std::vector<int> top_inpainted_target;
};

struct Ratio {
  int64_t numerator = 0;
  int64_t denominator = 1;

  double value() const {
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  // Equality of the represented rationals, not of the representation.
  bool operator==(const Ratio& o) const {
    return numerator * o.denominator == o.numerator * denominator;
  }
};

// |top_inpainted ∩ (top_original ∪ modified)| / |top_inpainted|.
// Inputs are treated as sets (duplicates collapse). Throws ArgumentError for
// an empty top_inpainted_target or an out-of-range index.
Ratio CausalWeight(const WeightInputs& inputs);

}  // namespace perturbench

#endif  // PERTURBENCH_WEIGHT_H_
