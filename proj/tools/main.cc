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

// perturbench: curate class sets, evaluate attribution methods, re-aggregate.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "perturbench/errors.h"
#include "perturbench/run.h"

namespace {

struct Flags {
  std::string config;
  std::string cache_dir;
  std::string out_dir;
  uint64_t seed = 0;
  std::vector<std::string> metrics;
  std::vector<std::string> attributors;
  int parallelism = 1;
  std::string records;
  std::string log_level = "info";
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perturbation-metric benchmark for image attribution methods"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "Run configuration (JSON)");
  auto* cache_opt = app.add_option("--cache-dir", f.cache_dir, "Inpainting cache directory");
  auto* out_opt = app.add_option("--out-dir", f.out_dir, "Output directory");
  auto* seed_opt = app.add_option("--seed", f.seed, "Global seed");
  auto* metrics_opt = app.add_option("--metrics", f.metrics, "Comma-separated metric ids")
                          ->delimiter(',');
  auto* attr_opt = app.add_option("--attributors", f.attributors,
                                  "Comma-separated attribution method ids")
                       ->delimiter(',');
  auto* par_opt = app.add_option("--parallelism", f.parallelism, "Worker threads")
                      ->check(CLI::PositiveNumber);
  app.add_option("--log-level", f.log_level, "trace, debug, info, warn, error")
      ->capture_default_str();

  auto* curate = app.add_subcommand("curate", "Build the class set the generator renders well");
  auto* evaluate = app.add_subcommand("evaluate", "Score every (image, attributor, metric) cell");
  auto* report = app.add_subcommand("report", "Re-aggregate an existing records file");
  report->add_option("--records", f.records, "records.jsonl (default: <out-dir>/records.jsonl)");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(f.log_level));

  using namespace perturbench;
  try {
    RunConfig config = f.config.empty() ? RunConfig{} : LoadRunConfig(f.config);
    if (*cache_opt) config.cache_dir = f.cache_dir;
    if (*out_opt) config.out_dir = f.out_dir;
    if (*seed_opt) config.seed = f.seed;
    if (*metrics_opt) config.metrics = f.metrics;
    if (*attr_opt) config.attributors = f.attributors;
    if (*par_opt) config.parallelism = f.parallelism;

    if (*curate) {
      CmdCurate(config);
      return 0;
    }
    if (*evaluate) {
      const EvaluateOutcome outcome = CmdEvaluate(config);
      if (outcome.ok_cells == 0) spdlog::error("no cell was scored successfully");
      return outcome.exit_code();
    }
    const std::filesystem::path records =
        f.records.empty() ? std::filesystem::path(config.out_dir) / "records.jsonl"
                          : std::filesystem::path(f.records);
    CmdReport(records, config.out_dir,
              f.config.empty() ? std::nullopt : std::optional<RunConfig>(config));
    return 0;
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
