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

#include "perturbench/weight.h"

#include <algorithm>
#include <iterator>
#include <string>

#include "perturbench/errors.h"

namespace perturbench {
namespace {

std::vector<int> AsSet(std::vector<int> v, int universe, const char* name) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  if (!v.empty() && (v.front() < 0 || v.back() >= universe)) {
    throw ArgumentError(std::string(name) + " has an index outside [0, " +
                        std::to_string(universe) + ")");
  }
  return v;
}

}  // namespace

Ratio CausalWeight(const WeightInputs& inputs) {
  const auto modified = AsSet(inputs.modified, inputs.universe, "modified");
  const auto original = AsSet(inputs.top_original_target, inputs.universe,
                              "top_original_target");
  const auto inpainted = AsSet(inputs.top_inpainted_target, inputs.universe,
                               "top_inpainted_target");
  if (inpainted.empty()) {
    throw ArgumentError("causal weight is undefined for an empty inpainted top-p set");
  }
  std::vector<int> support;
  std::set_union(original.begin(), original.end(), modified.begin(),
                 modified.end(), std::back_inserter(support));
  std::vector<int> hit;
  std::set_intersection(inpainted.begin(), inpainted.end(), support.begin(),
                        support.end(), std::back_inserter(hit));
  return {static_cast<int64_t>(hit.size()), static_cast<int64_t>(inpainted.size())};
}

}  // namespace perturbench
