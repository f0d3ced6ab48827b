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

#ifndef PERTURBENCH_TESTS_FIXTURES_H_
#define PERTURBENCH_TESTS_FIXTURES_H_

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "perturbench/synthetic.h"

namespace fixtures {

using namespace perturbench;

// One class pair on a small grid plus the fallback. The region is rows
// 2..4 x cols 3..6 (12 cells).
inline synthetic::WorldSpec TinyWorld(int grid = 8, int patch_size = 1) {
  synthetic::WorldSpec s;
  s.grid_rows = grid;
  s.grid_cols = grid;
  s.patch_size = patch_size;
  std::vector<int> region;
  for (int r = 2; r < 5; ++r) {
    for (int c = 3; c < 7; ++c) region.push_back(r * grid + c);
  }
  s.classes.push_back({"red", {235, 20, 20}, region, 1.43, true});
  s.classes.push_back({"red_pale", {215, 40, 40}, region, 1.0, true});
  s.classes.push_back({"void", s.background, {}, 1.0, true});
  s.fallback_class = 2;
  return s;
}

struct Oracle {
  std::shared_ptr<const synthetic::World> world;
  std::shared_ptr<const Classifier> classifier;
  std::shared_ptr<const Inpainter> inpainter;
  std::shared_ptr<const Attributor> ground_truth;
  std::shared_ptr<const Attributor> noisy;
  std::shared_ptr<const Generator> generator;

  explicit Oracle(synthetic::WorldSpec spec)
      : world(std::make_shared<synthetic::World>(std::move(spec))),
        classifier(std::make_shared<synthetic::OracleClassifier>(world)),
        inpainter(std::make_shared<synthetic::OracleInpainter>(world)),
        ground_truth(std::make_shared<synthetic::GroundTruthAttributor>(world)),
        noisy(std::make_shared<synthetic::NoisyGroundTruthAttributor>(world, 3)),
        generator(std::make_shared<synthetic::OracleGenerator>(world)) {}
};

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("perturbench-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures

#endif  // PERTURBENCH_TESTS_FIXTURES_H_
