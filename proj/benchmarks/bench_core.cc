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

#include <random>

#include <benchmark/benchmark.h>

#include "fixtures.h"
#include "perturbench/mask.h"
#include "perturbench/relevance.h"
#include "perturbench/stratified.h"
#include "perturbench/weight.h"

namespace perturbench {
namespace {

std::vector<double> Noise(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

void BM_DownsampleToPatches(benchmark::State& state) {
  const RelevanceMap map = RelevanceMap::FromPixels({224, 224}, Noise(224 * 224, 1), 0, "b");
  for (auto _ : state) benchmark::DoNotOptimize(DownsampleToPatches(map, 16));
}
BENCHMARK(BM_DownsampleToPatches);

void BM_TopPSelect(benchmark::State& state) {
  const RelevanceMap map(14, 14, Noise(196, 2), Resolution::kPatch, 16, {224, 224}, 0, "b");
  const double p = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(TopPSelect(map, p));
}
BENCHMARK(BM_TopPSelect)->Arg(10)->Arg(50);

void BM_CausalWeight(benchmark::State& state) {
  std::vector<int> m, o, i;
  for (int x = 0; x < 196; ++x) {
    if (x % 2 == 0) m.push_back(x);
    if (x % 3 == 0) o.push_back(x);
    if (x % 5 != 0) i.push_back(x);
  }
  for (auto _ : state) benchmark::DoNotOptimize(CausalWeight({196, m, o, i}));
}
BENCHMARK(BM_CausalWeight);

void BM_EvaluateImage(benchmark::State& state) {
  const fixtures::Oracle o{synthetic::StandardWorld()};
  const auto data = synthetic::MakeDataset(*o.world, 1, 0);
  const StratifiedConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        EvaluateImage(data[0], *o.classifier, *o.noisy, *o.inpainter, config));
  }
}
BENCHMARK(BM_EvaluateImage)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace perturbench

BENCHMARK_MAIN();
