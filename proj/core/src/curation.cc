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

#include "perturbench/curation.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "perturbench/errors.h"
#include "perturbench/hashing.h"
#include "perturbench/stratified.h"

namespace perturbench {

bool AcceptClass(int n_correct, int n_generated, double threshold) {
  if (n_generated <= 0) return false;
  // Compare in integers scaled by 1e9 so that 0.5 * 20 is exactly 10.
  const auto scaled = static_cast<int64_t>(std::llround(threshold * 1e9));
  return int64_t{n_correct} * 1'000'000'000 >= scaled * n_generated;
}

nlohmann::json ToJson(const ClassSet& set) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cls, s] : set.per_class) {
    nlohmann::json entry = {{"name", s.name},
                            {"n_generated", s.n_generated},
                            {"n_correct", s.n_correct},
                            {"accepted", s.accepted}};
    if (!s.error.empty()) entry["error"] = s.error;
    per_class[std::to_string(cls)] = std::move(entry);
  }
  return {{"classes", set.classes},
          {"per_class", std::move(per_class)},
          {"generator_id", set.generator_id},
          {"classifier_id", set.classifier_id},
          {"seed", set.seed},
          {"n_per_class", set.n_per_class},
          {"threshold", set.threshold}};
}

ClassSet ClassSetFromJson(const nlohmann::json& j) {
  ClassSet set;
  set.classes = j.at("classes").get<std::set<int>>();
  for (const auto& [key, entry] : j.at("per_class").items()) {
    ClassStats s;
    s.name = entry.at("name").get<std::string>();
    s.n_generated = entry.at("n_generated").get<int>();
    s.n_correct = entry.at("n_correct").get<int>();
    s.accepted = entry.at("accepted").get<bool>();
    s.error = entry.value("error", "");
    set.per_class[std::stoi(key)] = std::move(s);
  }
  set.generator_id = j.at("generator_id").get<std::string>();
  set.classifier_id = j.at("classifier_id").get<std::string>();
  set.seed = j.at("seed").get<uint64_t>();
  set.n_per_class = j.at("n_per_class").get<int>();
  set.threshold = j.at("threshold").get<double>();
  for (int cls : set.classes) {
    const auto it = set.per_class.find(cls);
    if (it == set.per_class.end() || !it->second.accepted) {
      throw ConstructionError("class set lists class " + std::to_string(cls) +
                              " without accepted statistics");
    }
  }
  return set;
}

ClassSet CurateClasses(const Classifier& classifier, const Generator& generator,
                       const CurationOptions& options) {
  if (options.n_per_class <= 0) throw ArgumentError("n_per_class must be positive");
  if (!(options.threshold > 0.0) || options.threshold > 1.0) {
    throw ArgumentError("threshold must lie in (0, 1]");
  }
  const auto& names = classifier.class_names();
  std::vector<int> candidates = options.candidates;
  if (candidates.empty()) {
    candidates.resize(names.size());
    std::iota(candidates.begin(), candidates.end(), 0);
  }
  for (int cls : candidates) {
    if (cls < 0 || static_cast<size_t>(cls) >= names.size()) {
      throw ArgumentError("candidate class " + std::to_string(cls) + " out of range");
    }
  }

  ClassSet set;
  set.generator_id = generator.id();
  set.classifier_id = classifier.id();
  set.seed = options.seed;
  set.n_per_class = options.n_per_class;
  set.threshold = options.threshold;

  std::mutex mu;
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < candidates.size(); i = next++) {
      const int cls = candidates[i];
      ClassStats stats;
      stats.name = names[static_cast<size_t>(cls)];
      try {
        for (int k = 0; k < options.n_per_class; ++k) {
          const uint64_t seed = DeriveSeed("curate", options.seed, static_cast<uint64_t>(cls),
                                           static_cast<uint64_t>(k));
          Image image = generator.Generate(ClassPrompt(stats.name), seed);
          const int input = classifier.input_size();
          if (image.shape() != Shape{input, input}) image = ResizeBilinear(image, {input, input});
          ++stats.n_generated;
          if (Top1(classifier.Classify(image)) == cls) ++stats.n_correct;
        }
        stats.accepted = AcceptClass(stats.n_correct, stats.n_generated, options.threshold);
      } catch (const std::exception& e) {
        stats.error = e.what();
        stats.accepted = false;
        spdlog::warn("curation of class {} ('{}') failed: {}", cls, stats.name, stats.error);
      }
      std::lock_guard lock(mu);
      if (stats.accepted) set.classes.insert(cls);
      set.per_class[cls] = std::move(stats);
    }
  };
  const int n_threads = std::clamp(options.parallelism, 1, static_cast<int>(candidates.size()));
  std::vector<std::jthread> threads;
  for (int t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  return set;
}

FilterResult FilterEvalImages(const std::vector<EvalImage>& images,
                              const Classifier& classifier, const ClassSet& class_set,
                              const FilterOptions& options) {
  std::vector<size_t> order(images.size());
  std::iota(order.begin(), order.end(), size_t{0});
  if (options.sample_per_class) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  FilterResult result;
  std::vector<std::pair<size_t, int>> survivors;  // dataset index, top-1
  std::set<int> sampled;
  for (size_t idx : order) {
    const EvalImage& image = images[idx];
    const std::vector<double> scores = classifier.Classify(image.image);
    const int ranked = RankedClass(scores, options.target_rank);
    if (!class_set.contains(ranked)) {
      result.rejected.push_back(
          {image.id, "class at rank " + std::to_string(options.target_rank) + " (" +
                         classifier.class_names()[static_cast<size_t>(ranked)] +
                         ") is not in the class set"});
      continue;
    }
    const int top1 = Top1(scores);
    if (options.sample_per_class && !sampled.insert(top1).second) {
      result.rejected.push_back({image.id, "class already sampled"});
      continue;
    }
    survivors.emplace_back(idx, top1);
  }
  // Survivors keep dataset order.
  std::sort(survivors.begin(), survivors.end());
  for (const auto& [idx, top1] : survivors) result.kept.push_back(images[idx]);
  if (result.kept.empty()) {
    std::string diag = "no evaluation image survived filtering";
    for (size_t i = 0; i < result.rejected.size() && i < 10; ++i) {
      diag += "\n  " + result.rejected[i].image_id + ": " + result.rejected[i].reason;
    }
    if (result.rejected.size() > 10) {
      diag += "\n  ... and " + std::to_string(result.rejected.size() - 10) + " more";
    }
    throw ArgumentError(diag);
  }
  return result;
}

}  // namespace perturbench
