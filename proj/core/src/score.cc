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

#include "perturbench/score.h"

#include "perturbench/errors.h"

namespace perturbench {
namespace {

using nlohmann::json;

template <typename T>
json Optional(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> OptionalFrom(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

int ImageScore::error_steps() const {
  int n = 0;
  for (const auto& s : scores) n += s.has_value() ? 0 : 1;
  return n;
}

ImageScore MergeSeedRuns(const std::vector<ImageScore>& runs) {
  if (runs.empty()) throw ArgumentError("no runs to merge");
  ImageScore merged = runs.front();
  const size_t n_steps = merged.steps.size();
  for (const auto& run : runs) {
    if (run.steps != merged.steps || run.scores.size() != n_steps ||
        run.per_step.size() != n_steps) {
      throw ArgumentError("runs disagree on the step schedule");
    }
  }
  for (size_t s = 0; s < n_steps; ++s) {
    double sum = 0.0;
    int n = 0;
    merged.per_step[s].samples.clear();
    for (const auto& run : runs) {
      if (run.scores[s]) {
        sum += *run.scores[s];
        ++n;
      }
      const auto& samples = run.per_step[s].samples;
      merged.per_step[s].samples.insert(merged.per_step[s].samples.end(),
                                        samples.begin(), samples.end());
    }
    merged.scores[s] = n > 0 ? std::optional<double>(sum / n) : std::nullopt;
  }
  return merged;
}

json ToJson(const ImageScore& score) {
  json scores = json::array();
  for (const auto& s : score.scores) scores.push_back(Optional(s));
  json steps = json::array();
  for (const auto& detail : score.per_step) {
    json samples = json::array();
    for (const auto& sample : detail.samples) {
      samples.push_back({
          {"seed", sample.seed},
          {"predicted_class_after", Optional(sample.predicted_class_after)},
          {"confidence_after", Optional(sample.confidence_after)},
          {"weight", Optional(sample.weight)},
          {"inpaint_cache_key", sample.inpaint_cache_key},
          {"error", sample.error},
      });
    }
    steps.push_back({{"p", detail.p},
                     {"target_class", detail.target_class},
                     {"samples", std::move(samples)}});
  }
  return {
      {"image_id", score.image_id},
      {"method_id", score.method_id},
      {"metric_id", score.metric_id},
      {"steps", score.steps},
      {"scores", std::move(scores)},
      {"per_step", std::move(steps)},
      {"class_agnostic", score.class_agnostic},
  };
}

ImageScore ImageScoreFromJson(const json& j) {
  ImageScore score;
  score.image_id = j.at("image_id").get<std::string>();
  score.method_id = j.at("method_id").get<std::string>();
  score.metric_id = j.at("metric_id").get<std::string>();
  score.steps = j.at("steps").get<std::vector<double>>();
  for (const auto& s : j.at("scores")) {
    score.scores.push_back(s.is_null() ? std::nullopt
                                       : std::optional<double>(s.get<double>()));
  }
  for (const auto& d : j.at("per_step")) {
    StepDetail detail;
    detail.p = d.at("p").get<double>();
    detail.target_class = d.at("target_class").get<int>();
    for (const auto& s : d.at("samples")) {
      SampleDetail sample;
      sample.seed = s.at("seed").get<uint64_t>();
      sample.predicted_class_after = OptionalFrom<int>(s, "predicted_class_after");
      sample.confidence_after = OptionalFrom<double>(s, "confidence_after");
      sample.weight = OptionalFrom<double>(s, "weight");
      sample.inpaint_cache_key = s.value("inpaint_cache_key", "");
      sample.error = s.value("error", "");
      detail.samples.push_back(std::move(sample));
    }
    score.per_step.push_back(std::move(detail));
  }
  score.class_agnostic = j.value("class_agnostic", false);
  if (score.scores.size() != score.steps.size() ||
      score.per_step.size() != score.steps.size()) {
    throw ConstructionError("score record has inconsistent step counts");
  }
  for (const auto& s : score.scores) {
    if (s && (*s < 0.0 || *s > 1.0)) {
      throw ConstructionError("score outside [0, 1]");
    }
  }
  return score;
}

}  // namespace perturbench
