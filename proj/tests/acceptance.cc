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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances and sizes are pinned below.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.h"
#include "oracles.h"
#include "perturbench/aggregate.h"
#include "perturbench/baselines.h"
#include "perturbench/curation.h"
#include "perturbench/errors.h"
#include "perturbench/hashing.h"
#include "perturbench/mask.h"
#include "perturbench/run.h"
#include "perturbench/stratified.h"
#include "perturbench/weight.h"

#include <spdlog/spdlog.h>

namespace {

using namespace perturbench;
namespace fs = std::filesystem;

constexpr int kWeightTriples = 1000;
constexpr double kWeightBudgetS = 5.0;
constexpr int kTopPMaps = 1000;
constexpr double kTopPBudgetS = 10.0;
constexpr int kSeparationImages = 50;
constexpr int kRandomSeeds = 5;
constexpr double kMinGap = 0.5;
constexpr double kMinRandDist = 0.5;
constexpr double kSeparationBudgetS = 60.0;
constexpr int kOodImages = 20;
constexpr double kOodMaxStratifiedAuc = 0.1;
constexpr double kOodBudgetS = 60.0;
constexpr int kRankingSets = 1000;
constexpr int kPerturbationPairs = 200;

// Thrown by Check; carries the first violated expectation.
struct Failure {
  std::string what;
};

void Check(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

std::string Fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<int> RandomSubset(std::mt19937_64& rng, int n) {
  std::vector<int> all(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<size_t>(rng() % static_cast<uint64_t>(n + 1)));
  return all;
}

// --- 1 ---------------------------------------------------------------------
std::string WeightOracle() {
  std::mt19937_64 rng(1);
  int checked = 0;
  while (checked < kWeightTriples) {
    const int rows = 1 + static_cast<int>(rng() % 14);
    const int cols = 1 + static_cast<int>(rng() % 14);
    const int n = rows * cols;
    const auto m = RandomSubset(rng, n);
    const auto o = RandomSubset(rng, n);
    const auto inp = RandomSubset(rng, n);
    if (inp.empty()) continue;
    const auto [num, den] = oracle::Weight(n, m, o, inp);
    const Ratio w = CausalWeight({n, m, o, inp});
    Check(w == Ratio{num, den}, "triple " + std::to_string(checked) + ": got " +
                                    std::to_string(w.numerator) + "/" +
                                    std::to_string(w.denominator) + ", oracle " +
                                    std::to_string(num) + "/" + std::to_string(den));
    ++checked;
  }
  // Full 14x14 grid with everything modified.
  std::vector<int> all(196);
  for (int i = 0; i < 196; ++i) all[static_cast<size_t>(i)] = i;
  Check(CausalWeight({196, all, {}, all}) == Ratio{1, 1}, "full grid");
  return std::to_string(checked) + " triples exact";
}

// --- 2 ---------------------------------------------------------------------
std::string TopPOracle() {
  std::mt19937_64 rng(2);
  int with_duplicates = 0;
  for (int trial = 0; trial < kTopPMaps; ++trial) {
    const int rows = 1 + static_cast<int>(rng() % 14);
    const int cols = 1 + static_cast<int>(rng() % 14);
    const int n = rows * cols;
    const uint64_t levels = 1 + rng() % 8;
    std::vector<double> v(static_cast<size_t>(n));
    for (double& x : v) x = static_cast<double>(rng() % levels) * 0.25;
    if (std::set<double>(v.begin(), v.end()).size() < v.size()) ++with_duplicates;
    const RelevanceMap map(rows, cols, v, Resolution::kPatch, 1, {rows, cols}, 0, "acc");
    for (int percent : {10, 20, 30, 40, 50}) {
      const int k = oracle::CountForPercent(percent, n);
      if (k == 0) continue;
      const PatchMask mask = TopPSelect(map, percent / 100.0);
      Check(static_cast<int>(mask.selected().size()) == k,
            "map " + std::to_string(trial) + " cardinality");
      Check(mask.selected() == oracle::TopK(v, k), "map " + std::to_string(trial) + " at " +
                                                       std::to_string(percent) + "%");
    }
  }
  Check(with_duplicates > kTopPMaps / 2, "too few maps with duplicated values");
  Check(SelectionCount(0.10, 196) == 20, "20 of 196 at p = 0.10");
  const RelevanceMap flat(14, 14, std::vector<double>(196, 1.0), Resolution::kPatch, 1,
                          {14, 14}, 0, "acc");
  Check(TopPSelect(flat, 0.10).selected() == oracle::TopK(std::vector<double>(196, 1.0), 20),
        "all-equal 14x14 map");
  return std::to_string(kTopPMaps) + " maps (" + std::to_string(with_duplicates) +
         " with duplicates), 20 of 196 at p=0.10";
}

// Per-image scores for one attributor, random averaged over seeds as in a run.
ImageScore Stratified(const EvalImage& img, const fixtures::Oracle& o, const std::string& method,
                      const StratifiedConfig& config) {
  if (method == "random") {
    std::vector<ImageScore> runs;
    for (int r = 0; r < kRandomSeeds; ++r) {
      const RandomAttributor random(DeriveSeed("random", img.id, config.inpaint_seed,
                                               static_cast<uint64_t>(r)),
                                    config.patch_size);
      runs.push_back(EvaluateImage(img, *o.classifier, random, *o.inpainter, config));
    }
    return MergeSeedRuns(runs);
  }
  const Attributor& attr = method == "ground_truth" ? *o.ground_truth : *o.noisy;
  return EvaluateImage(img, *o.classifier, attr, *o.inpainter, config);
}

// --- 3 ---------------------------------------------------------------------
std::string Separation() {
  const fixtures::Oracle o{synthetic::StandardWorld()};
  Check(o.world->spec().grid_rows == 14 && o.world->spec().grid_cols == 14, "grid is not 14x14");
  const auto data = synthetic::MakeDataset(*o.world, kSeparationImages, 3);
  StratifiedConfig config;
  config.inpaint_seed = 3;
  std::vector<ImageScore> scores;
  for (const auto& img : data) {
    for (const char* m : {"ground_truth", "noisy_ground_truth", "random"}) {
      scores.push_back(Stratified(img, o, m, config));
    }
  }
  const MetricSummary s = SummarizeMetrics(scores, {}).at("stratified");
  Check(!s.non_discriminative && s.rand_dist.has_value(), "metric not normalisable");
  const double gt = *s.methods.at("ground_truth").normalized_auc;
  const double rnd = *s.methods.at("random").normalized_auc;
  const double noisy = *s.methods.at("noisy_ground_truth").normalized_auc;
  Check(gt - rnd >= kMinGap, "gap " + Fmt(gt - rnd) + " < " + Fmt(kMinGap));
  Check(*s.rand_dist >= kMinRandDist, "rand_dist " + Fmt(*s.rand_dist));
  Check(s.ranking == std::vector<std::string>({"ground_truth", "noisy_ground_truth", "random"}),
        "ranking is not ground_truth > noisy > random");
  std::ostringstream msg;
  msg << kSeparationImages << " images: norm AUC gt=" << Fmt(gt) << " noisy=" << Fmt(noisy)
      << " random=" << Fmt(rnd) << ", gap=" << Fmt(gt - rnd) << " (>= " << kMinGap
      << "), rand_dist=" << Fmt(*s.rand_dist) << " (>= " << kMinRandDist << ")";
  return msg.str();
}

// --- 4 ---------------------------------------------------------------------
std::string OodPathology() {
  const fixtures::Oracle ood{synthetic::StandardWorld(5, 7, true)};
  Check(ood.classifier->id() == "oracle-classifier-ood", "not the OOD classifier");
  const auto data = synthetic::MakeDataset(*ood.world, kOodImages, 4);
  PerturbationKind deletion;
  deletion.type = PerturbationType::kDelete;
  StratifiedConfig config;
  config.inpaint_seed = 4;
  std::vector<ImageScore> del, strat;
  for (const auto& img : data) {
    std::vector<ImageScore> runs;
    for (int r = 0; r < kRandomSeeds; ++r) {
      const RandomAttributor random(DeriveSeed("random", img.id, 4, static_cast<uint64_t>(r)), 16);
      runs.push_back(BaselineCurve(img, *ood.classifier, random, deletion, CurveOptions{}));
    }
    del.push_back(MergeSeedRuns(runs));
    strat.push_back(Stratified(img, ood, "random", config));
  }
  const PerturbationCurve dc = AverageCurve(del);
  for (double v : dc.mean_scores) Check(v == 1.0, "delete curve point " + Fmt(v) + " != 1");
  const double delete_auc = Auc(dc);
  Check(delete_auc == 1.0, "delete AUC " + Fmt(delete_auc));
  const double strat_auc = Auc(AverageCurve(strat));
  Check(strat_auc <= kOodMaxStratifiedAuc, "stratified AUC " + Fmt(strat_auc));
  return std::to_string(kOodImages) + " images, random attribution: delete AUC=" +
         Fmt(delete_auc) + " (== 1), stratified AUC=" + Fmt(strat_auc) + " (<= " +
         Fmt(kOodMaxStratifiedAuc) + ")";
}

// --- 5 ---------------------------------------------------------------------
std::string Aggregation() {
  const MethodValues n = NormalizeAucs({{"a", 0.2}, {"b", 0.4}, {"c", 0.8}});
  Check(n.at("a") == 0.0 && n.at("b") == 1.0 / 3.0 && n.at("c") == 1.0,
        "normalize {0.2, 0.4, 0.8} = {" + Fmt(n.at("a")) + ", " + Fmt(n.at("b")) + ", " +
            Fmt(n.at("c")) + "}");
  const double rd = RandDist({{"a", 1.0}, {"b", 0.8}, {"c", 0.6}, {"random", 0.0}}, "random");
  Check(rd == 0.8, "rand_dist = " + Fmt(rd));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int compared = 0;
  for (int trial = 0; trial < kRankingSets; ++trial) {
    MethodValues raw;
    const int k = 2 + static_cast<int>(rng() % 9);
    for (int i = 0; i < k; ++i) {
      // Every other set on a coarse lattice, to force ties.
      const double v = u(rng);
      raw["m" + std::to_string(i)] = trial % 2 ? std::round(v * 10) / 10 : v;
    }
    MethodValues normalized;
    try {
      normalized = NormalizeAucs(raw);
    } catch (const DegenerateError&) {
      continue;
    }
    Check(RankMethods(normalized) == RankMethods(raw), "ranking changed in set " +
                                                           std::to_string(trial));
    ++compared;
  }
  Check(compared >= kRankingSets * 9 / 10, "too many degenerate sets");
  return "normalize exact {0, 1/3, 1}, rand_dist=0.8 exact, " + std::to_string(compared) +
         " random sets rank-invariant";
}

// --- 6 ---------------------------------------------------------------------
std::string PerturbationExactness() {
  std::mt19937_64 rng(6);
  for (int pair = 0; pair < kPerturbationPairs; ++pair) {
    const int h = 2 + static_cast<int>(rng() % 64), w = 2 + static_cast<int>(rng() % 64);
    Image img(h, w);
    for (auto& b : img.mutable_bytes()) b = static_cast<uint8_t>(rng() & 0xff);
    PixelMask mask(h, w);
    const uint64_t density = rng() % 101;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) mask.set(y, x, rng() % 100 < density);
    }
    for (auto t : {PerturbationType::kDelete, PerturbationType::kBlur,
                   PerturbationType::kChannelMean}) {
      PerturbationKind kind;
      kind.type = t;
      const Image out = Perturb(img, mask, kind);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          for (int c = 0; c < 3; ++c) {
            if (!mask.get(y, x)) {
              Check(out.at(y, x, c) == img.at(y, x, c),
                    "pair " + std::to_string(pair) + " unmasked pixel changed");
            } else if (t == PerturbationType::kDelete) {
              Check(out.at(y, x, c) == 0, "pair " + std::to_string(pair) + " delete not 0");
            }
          }
        }
      }
    }
  }
  // R 10 20 30 41 -> 25.25 -> 25; G 0 0 0 2 -> 0.5 -> 1; B 255 255 254 254 -> 254.5 -> 255
  const Image fixture(2, 2, std::vector<uint8_t>{10, 0, 255, 20, 0, 255, 30, 0, 254, 41, 2, 254});
  PixelMask all(2, 2, true);
  PerturbationKind mean;
  mean.type = PerturbationType::kChannelMean;
  const Image out = Perturb(fixture, all, mean);
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 2; ++x) {
      Check(out.at(y, x, 0) == 25 && out.at(y, x, 1) == 1 && out.at(y, x, 2) == 255,
            "2x2 channel mean");
    }
  }
  return std::to_string(kPerturbationPairs) + " pairs x 3 kinds exact, 2x2 mean = (25, 1, 255)";
}

// Yields the true class for the first `correct` requests of each prompt and
// a blank image afterwards.
class QuotaGenerator final : public Generator {
 public:
  QuotaGenerator(std::shared_ptr<const Generator> inner, const synthetic::World& world, int correct)
      : inner_(std::move(inner)), world_(world), correct_(correct) {}
  std::string id() const override { return "quota"; }
  Image Generate(const std::string& prompt, uint64_t seed) const override {
    std::lock_guard lock(mu_);
    if (counts_[prompt]++ < correct_) return inner_->Generate(prompt, seed);
    return world_.Render(-1, seed);
  }

 private:
  std::shared_ptr<const Generator> inner_;
  const synthetic::World& world_;
  int correct_;
  mutable std::mutex mu_;
  mutable std::map<std::string, int> counts_;
};

// --- 7 ---------------------------------------------------------------------
std::string Curation() {
  Check(AcceptClass(10, 20, 0.5), "10/20 rejected");
  Check(!AcceptClass(9, 20, 0.5), "9/20 accepted");
  const fixtures::Oracle o{synthetic::StandardWorld()};
  CurationOptions options;
  options.candidates = {0, 3};
  for (int correct : {9, 10}) {
    const QuotaGenerator gen(o.generator, *o.world, correct);
    const ClassSet set = CurateClasses(*o.classifier, gen, options);
    for (int cls : options.candidates) {
      Check(set.per_class.at(cls).n_correct == correct, "quota generator miscounted");
      Check(set.contains(cls) == (correct == 10),
            std::to_string(correct) + "/20 for class " + std::to_string(cls));
    }
  }
  // Filter predicate on a full curated set with some classes left out.
  const ClassSet curated = CurateClasses(*o.classifier, *o.generator, CurationOptions{});
  ClassSet partial = curated;
  for (int cls : {3, 7}) partial.classes.erase(cls);
  const auto data = synthetic::MakeDataset(*o.world, 40, 7);
  const FilterResult r = FilterEvalImages(data, *o.classifier, partial, {});
  for (const auto& img : r.kept) {
    const int ranked = RankedClass(o.classifier->Classify(img.image), 2);
    Check(partial.contains(ranked), img.id + " kept with rank-2 class outside S");
  }
  for (const auto& rej : r.rejected) {
    const auto it = std::find_if(data.begin(), data.end(),
                                 [&](const EvalImage& e) { return e.id == rej.image_id; });
    Check(!partial.contains(RankedClass(o.classifier->Classify(it->image), 2)),
          rej.image_id + " rejected with rank-2 class in S");
  }
  Check(r.kept.size() + r.rejected.size() == data.size(), "filter lost images");
  Check(!r.rejected.empty() && !r.kept.empty(), "filter fixture not mixed");
  return "10/20 accepted, 9/20 rejected; filter kept " + std::to_string(r.kept.size()) +
         ", rejected " + std::to_string(r.rejected.size()) + ", predicate holds";
}

// --- 8 ---------------------------------------------------------------------
RunConfig SmallRun(const fs::path& root) {
  RunConfig c;
  c.seed = 8;
  c.cache_dir = (root / "cache").string();
  c.out_dir = (root / "out").string();
  c.dataset.n_images = 4;
  c.metrics = {"stratified", "delete"};
  c.attributors = {"ground_truth", "noisy_ground_truth", "random"};
  c.random_seeds = 2;
  return c;
}

EvaluateOutcome Run(const RunConfig& c, EvaluateOptions options = {}) {
  return RunEvaluation(c, BuildBackends(c, {true, false, true}), options);
}

std::string DeterminismAndResume() {
  fixtures::TempDir a("acc-a"), b("acc-b"), r("acc-resume");
  const EvaluateOutcome oa = Run(SmallRun(a.path()));
  const EvaluateOutcome ob = Run(SmallRun(b.path()));
  const std::string ha = Sha256Hex(Slurp(oa.report_path));
  const std::string hb = Sha256Hex(Slurp(ob.report_path));
  Check(oa.completed && ob.completed, "run did not complete");
  Check(ha == hb, "report hashes differ: " + ha + " vs " + hb);

  const RunConfig cr = SmallRun(r.path());
  EvaluateOptions stop;
  stop.stop_after_cells = 5;  // the fifth cell is random x stratified on the first image
  const EvaluateOutcome partial = Run(cr, stop);
  Check(!partial.completed, "interrupted run reported completion");
  // Kill mid-write: cut the last record in half.
  std::string text = Slurp(partial.records_path);
  const size_t start = text.rfind('\n', text.size() - 2) + 1;
  text.resize(start + (text.size() - start) / 2);
  std::ofstream(partial.records_path, std::ios::binary | std::ios::trunc) << text;
  const EvaluateOutcome resumed = Run(cr);
  const std::string hr = Sha256Hex(Slurp(resumed.report_path));
  Check(resumed.completed, "resumed run did not complete");
  Check(resumed.resumed_cells == 4, "resumed " + std::to_string(resumed.resumed_cells) +
                                        " cells, expected 4");
  Check(resumed.cache_hits > 0, "no cache replay on resume");
  Check(hr == ha, "resumed report hash differs");
  return "report sha256 " + ha.substr(0, 16) + " identical across 2 runs and after resume (" +
         std::to_string(resumed.cache_hits) + " cache hits)";
}

// --- 9 ---------------------------------------------------------------------
std::string Ablations() {
  const fixtures::Oracle tiny{fixtures::TinyWorld(8, 1)};
  const auto data = synthetic::MakeDataset(*tiny.world, 6, 9);
  StratifiedConfig patch, pixel;
  patch.patch_size = 1;
  pixel.granularity = Granularity::kPixel;
  int compared = 0;
  for (const auto& img : data) {
    for (const Attributor* attr : {tiny.ground_truth.get(), tiny.noisy.get()}) {
      const ImageScore a = EvaluateImage(img, *tiny.classifier, *attr, *tiny.inpainter, patch);
      const ImageScore b = EvaluateImage(img, *tiny.classifier, *attr, *tiny.inpainter, pixel);
      Check(a.scores == b.scores && a.per_step == b.per_step, img.id + " patch != pixel");
      ++compared;
    }
  }
  const fixtures::Oracle o{synthetic::StandardWorld()};
  StratifiedConfig weighted, unweighted;
  unweighted.apply_weighting = false;
  int points = 0;
  for (const auto& img : synthetic::MakeDataset(*o.world, 10, 9)) {
    const ImageScore w = EvaluateImage(img, *o.classifier, *o.noisy, *o.inpainter, weighted);
    const ImageScore u = EvaluateImage(img, *o.classifier, *o.noisy, *o.inpainter, unweighted);
    for (size_t i = 0; i < w.scores.size(); ++i) {
      Check(w.per_step[i].samples[0].predicted_class_after ==
                u.per_step[i].samples[0].predicted_class_after,
            img.id + " transcripts differ");
      Check(*u.scores[i] >= *w.scores[i], img.id + " unweighted < weighted");
      ++points;
    }
  }
  return std::to_string(compared) + " 8x8 patch/pixel pairs identical, " +
         std::to_string(points) + " points unweighted >= weighted";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  struct Criterion {
    int id;
    const char* name;
    std::function<std::string()> run;
    double budget_s;  // 0: no runtime bound
  };
  const std::vector<Criterion> criteria = {
      {1, "weighting oracle", WeightOracle, kWeightBudgetS},
      {2, "top-p oracle", TopPOracle, kTopPBudgetS},
      {3, "synthetic separation", Separation, kSeparationBudgetS},
      {4, "OOD pathology", OodPathology, kOodBudgetS},
      {5, "aggregation arithmetic", Aggregation, 0},
      {6, "perturbation exactness", PerturbationExactness, 0},
      {7, "curation threshold", Curation, 0},
      {8, "determinism and resume", DeterminismAndResume, 0},
      {9, "ablation toggles", Ablations, 0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = c.run();
    } catch (const Failure& f) {
      ok = false;
      detail = f.what;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && c.budget_s > 0 && secs >= c.budget_s) {
      ok = false;
      detail += " (over the " + Fmt(c.budget_s) + " s budget)";
    }
    if (!ok) ++failed;
    std::printf("%s %d %s [%.2f s]: %s\n", ok ? "PASS" : "FAIL", c.id, c.name, secs,
                detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
