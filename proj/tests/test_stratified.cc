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

#include <atomic>

#include <gtest/gtest.h>

#include "fixtures.h"
#include "perturbench/errors.h"
#include "perturbench/stratified.h"

namespace perturbench {
namespace {

class FlakyInpainter final : public Inpainter {
 public:
  // Fails every call whose ordinal is divisible by `period` (0: always).
  FlakyInpainter(std::shared_ptr<const Inpainter> inner, int period)
      : inner_(std::move(inner)), period_(period) {}
  std::string id() const override { return "flaky"; }
  InpaintResult Inpaint(const Image& image, const PixelMask& keep, const std::string& prompt,
                        uint64_t seed) const override {
    const int n = calls_++;
    if (period_ == 0 || n % period_ == 0) throw BackendError("engine unavailable");
    return inner_->Inpaint(image, keep, prompt, seed);
  }

 private:
  std::shared_ptr<const Inpainter> inner_;
  int period_;
  mutable std::atomic<int> calls_{0};
};

class BrokenAttributor final : public Attributor {
 public:
  std::string id() const override { return "broken"; }
  bool class_specific() const override { return true; }
  RelevanceMap Explain(const Classifier&, const Image&, std::optional<int>) const override {
    throw std::runtime_error("gradient exploded");
  }
};

class StratifiedTest : public ::testing::Test {
 protected:
  fixtures::Oracle o{synthetic::StandardWorld()};
  std::vector<EvalImage> data = synthetic::MakeDataset(*o.world, 5, 3);
};

TEST_F(StratifiedTest, GroundTruthScoresOneEverywhere) {
  const StratifiedConfig config;
  for (const auto& img : data) {
    const ImageScore s = EvaluateImage(img, *o.classifier, *o.ground_truth, *o.inpainter, config);
    ASSERT_EQ(s.scores.size(), 5u);
    for (size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(s.scores[i], 1.0) << img.id << " step " << i;
      const auto& sample = s.per_step[i].samples.at(0);
      EXPECT_EQ(sample.predicted_class_after, s.per_step[i].target_class);
      EXPECT_EQ(sample.weight, 1.0);
    }
    EXPECT_EQ(s.metric_id, "stratified");
    EXPECT_EQ(s.method_id, "ground_truth");
    EXPECT_FALSE(s.class_agnostic);
  }
}

TEST_F(StratifiedTest, TargetIsTheRankTwoClassOfTheOriginal) {
  const ImageScore s =
      EvaluateImage(data[0], *o.classifier, *o.ground_truth, *o.inpainter, StratifiedConfig{});
  const auto scores = o.classifier->Classify(data[0].image);
  for (const auto& step : s.per_step) EXPECT_EQ(step.target_class, RankedClass(scores, 2));
}

TEST_F(StratifiedTest, TopTenTargetUsesRankTen) {
  StratifiedConfig config;
  config.target_rank = 10;
  const ImageScore s = EvaluateImage(data[1], *o.classifier, *o.ground_truth, *o.inpainter, config);
  const int target = RankedClass(o.classifier->Classify(data[1].image), 10);
  for (const auto& step : s.per_step) EXPECT_EQ(step.target_class, target);
}

TEST_F(StratifiedTest, IsDeterministic) {
  const StratifiedConfig config;
  EXPECT_EQ(EvaluateImage(data[2], *o.classifier, *o.noisy, *o.inpainter, config),
            EvaluateImage(data[2], *o.classifier, *o.noisy, *o.inpainter, config));
  EXPECT_NE(InpaintSeed("a", 0, 1), InpaintSeed("a", 1, 1));
  EXPECT_NE(InpaintSeed("a", 0, 1), InpaintSeed("b", 0, 1));
  EXPECT_NE(InpaintSeed("a", 0, 1, 0), InpaintSeed("a", 0, 1, 1));
}

TEST_F(StratifiedTest, WeightOnlyRecordedOnHits) {
  const ImageScore s =
      EvaluateImage(data[0], *o.classifier, *o.noisy, *o.inpainter, StratifiedConfig{});
  for (size_t i = 0; i < s.per_step.size(); ++i) {
    const auto& sample = s.per_step[i].samples.at(0);
    const bool hit = sample.predicted_class_after == s.per_step[i].target_class;
    EXPECT_EQ(sample.weight.has_value(), hit);
    if (hit) {
      EXPECT_EQ(s.scores[i], *sample.weight);
    } else {
      EXPECT_EQ(s.scores[i], 0.0);
    }
  }
}

TEST_F(StratifiedTest, UnweightedDominatesWeighted) {
  StratifiedConfig weighted, unweighted;
  unweighted.apply_weighting = false;
  for (const auto& img : data) {
    const ImageScore a = EvaluateImage(img, *o.classifier, *o.noisy, *o.inpainter, weighted);
    const ImageScore b = EvaluateImage(img, *o.classifier, *o.noisy, *o.inpainter, unweighted);
    for (size_t i = 0; i < a.scores.size(); ++i) {
      EXPECT_GE(*b.scores[i], *a.scores[i]);
      EXPECT_EQ(a.per_step[i].samples[0].predicted_class_after,
                b.per_step[i].samples[0].predicted_class_after);
    }
  }
}

TEST(StratifiedAblation, PixelGranularityEqualsPatchSizeOne) {
  fixtures::Oracle o{fixtures::TinyWorld(8, 1)};
  const auto data = synthetic::MakeDataset(*o.world, 4, 1);
  StratifiedConfig patch, pixel;
  patch.patch_size = 1;
  pixel.granularity = Granularity::kPixel;
  for (const auto& img : data) {
    for (const auto* attr : {o.ground_truth.get(), o.noisy.get()}) {
      EXPECT_EQ(EvaluateImage(img, *o.classifier, *attr, *o.inpainter, patch),
                EvaluateImage(img, *o.classifier, *attr, *o.inpainter, pixel));
    }
  }
}

TEST_F(StratifiedTest, InpainterFailuresExcludeTheStep) {
  const FlakyInpainter always(o.inpainter, 0);
  const ImageScore s =
      EvaluateImage(data[0], *o.classifier, *o.ground_truth, always, StratifiedConfig{});
  EXPECT_EQ(s.error_steps(), 5);
  for (const auto& v : s.scores) EXPECT_FALSE(v.has_value());
  EXPECT_FALSE(s.per_step[0].samples[0].ok());

  // Two samples per step, the first of each pair fails: every step survives
  // on its second sample.
  StratifiedConfig two;
  two.samples_per_step = 2;
  const FlakyInpainter every_other(o.inpainter, 2);
  const ImageScore t = EvaluateImage(data[0], *o.classifier, *o.ground_truth, every_other, two);
  EXPECT_EQ(t.error_steps(), 0);
  for (const auto& v : t.scores) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(t.per_step[0].samples.size(), 2u);
}

TEST_F(StratifiedTest, AttributorFailureSkipsTheImage) {
  const BrokenAttributor broken;
  EXPECT_THROW(EvaluateImage(data[0], *o.classifier, broken, *o.inpainter, StratifiedConfig{}),
               AttributionError);
}

TEST(StratifiedConfig, ValidationAndJson) {
  StratifiedConfig c;
  c.steps = {0.2, 0.1};
  EXPECT_THROW(c.Validate(), ConfigError);
  c.steps = {0.1, 0.6};
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.target_rank = 1;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.granularity = Granularity::kPixel;
  c.apply_weighting = false;
  const StratifiedConfig back = StratifiedConfigFromJson(ToJson(c));
  EXPECT_EQ(back.granularity, Granularity::kPixel);
  EXPECT_FALSE(back.apply_weighting);
  EXPECT_EQ(back.effective_patch_size(), 1);
  EXPECT_THROW(GranularityFromString("voxel"), ConfigError);
}

TEST(RankedClass, TiesByIndex) {
  const std::vector<double> s = {0.2, 0.5, 0.2, 0.1};
  EXPECT_EQ(RankedClass(s, 1), 1);
  EXPECT_EQ(RankedClass(s, 2), 0);
  EXPECT_EQ(RankedClass(s, 3), 2);
  EXPECT_THROW(RankedClass(s, 5), ArgumentError);
}

}  // namespace
}  // namespace perturbench
