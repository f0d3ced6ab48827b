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

#ifndef PERTURBENCH_CURATION_H_
#define PERTURBENCH_CURATION_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturbench/backends.h"

namespace perturbench {

struct ClassStats {
  std::string name;
  int n_generated = 0;
  int n_correct = 0;
  bool accepted = false;
  // Set when generation failed; such classes are excluded.
  std::string error;

  bool operator==(const ClassStats&) const = default;
};

// Classes the generator renders recognisably, with per-class statistics.
struct ClassSet {
  std::set<int> classes;
  std::map<int, ClassStats> per_class;
  std::string generator_id;
  std::string classifier_id;
  uint64_t seed = 0;
  int n_per_class = 20;
  double threshold = 0.5;

  bool contains(int cls) const { return classes.count(cls) > 0; }
  bool operator==(const ClassSet&) const = default;
};

nlohmann::json ToJson(const ClassSet& set);
ClassSet ClassSetFromJson(const nlohmann::json& j);

// n_correct / n_generated >= threshold, evaluated without floating-point
// division (10 of 20 at 0.5 is accepted, 9 of 20 is not).
bool AcceptClass(int n_correct, int n_generated, double threshold);

struct CurationOptions {
  int n_per_class = 20;
  double threshold = 0.5;
  uint64_t seed = 0;
  // Classes to examine; all classifier classes when empty.
  std::vector<int> candidates;
  int parallelism = 1;
};

// For each candidate class t: generate n_per_class images from the prompt
// "<class name>", classify them, and accept t when the fraction whose top-1
// is t reaches the threshold.
ClassSet CurateClasses(const Classifier& classifier, const Generator& generator,
                       const CurationOptions& options);

struct Rejection {
  std::string image_id;
  std::string reason;
};

struct FilterOptions {
  int target_rank = 2;
  // Keep one image per top-1 class: the first surviving image in a seeded
  // shuffle of the dataset order.
  bool sample_per_class = false;
  uint64_t seed = 0;
};

struct FilterResult {
  std::vector<EvalImage> kept;
  std::vector<Rejection> rejected;
};

// Keeps images whose class at `target_rank` is in the class set. Throws
// ArgumentError listing rejection reasons when nothing survives.
FilterResult FilterEvalImages(const std::vector<EvalImage>& images,
                              const Classifier& classifier, const ClassSet& class_set,
                              const FilterOptions& options);

}  // namespace perturbench

#endif  // PERTURBENCH_CURATION_H_
