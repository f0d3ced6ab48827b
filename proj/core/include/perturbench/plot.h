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

#ifndef PERTURBENCH_PLOT_H_
#define PERTURBENCH_PLOT_H_

#include <filesystem>
#include <vector>

#include "perturbench/aggregate.h"

namespace perturbench {

// Renders one panel: mean score against p, one line per method.
void PlotMetric(const MetricSummary& metric, const std::filesystem::path& png);

// Writes plot_<metric>.png for every metric and curves.png with all panels
// side by side. Returns the written paths.
std::vector<std::filesystem::path> PlotReport(const EvaluationReport& report,
                                              const std::filesystem::path& out_dir);

}  // namespace perturbench

#endif  // PERTURBENCH_PLOT_H_
