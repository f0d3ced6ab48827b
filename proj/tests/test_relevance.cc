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

#include <gtest/gtest.h>
#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "perturbench/errors.h"
#include "perturbench/relevance.h"

namespace perturbench {
namespace {

std::vector<double> RandomValues(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = u(rng);
  return v;
}

// OpenCV's INTER_LINEAR uses the same half-pixel convention without
// antialiasing; it serves as the reference for divisible sizes.
TEST(Downsample, MatchesOpenCvBilinear) {
  for (int ps : {2, 4, 7, 16}) {
    const int h = 14 * ps, w = 14 * ps;
    const auto values = RandomValues(h * w, static_cast<uint64_t>(ps));
    const RelevanceMap pixels = RelevanceMap::FromPixels({h, w}, values, 0, "t");
    const RelevanceMap patches = DownsampleToPatches(pixels, ps);
    ASSERT_EQ(patches.rows(), 14);
    ASSERT_EQ(patches.cols(), 14);
    EXPECT_EQ(patches.resolution(), Resolution::kPatch);

    cv::Mat src(h, w, CV_64F, const_cast<double*>(values.data()));
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(14, 14), 0, 0, cv::INTER_LINEAR);
    for (int r = 0; r < 14; ++r) {
      for (int c = 0; c < 14; ++c) {
        // OpenCV's fixed-point weights are exact for these sampling points.
        EXPECT_NEAR(patches.at(r, c), dst.at<double>(r, c), 1e-9) << ps << " " << r << "," << c;
      }
    }
  }
}

TEST(Downsample, EvenPatchIsMeanOfCentralFour) {
  // 224 -> 14: the sample point of patch (0, 0) is (7.5, 7.5).
  std::vector<double> v(224 * 224, 0.0);
  v[7 * 224 + 7] = 1.0;
  v[7 * 224 + 8] = 2.0;
  v[8 * 224 + 7] = 3.0;
  v[8 * 224 + 8] = 6.0;
  const RelevanceMap p = DownsampleToPatches(RelevanceMap::FromPixels({224, 224}, v, 0, "t"), 16);
  EXPECT_DOUBLE_EQ(p.at(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(p.at(0, 1), 0.0);
}

TEST(Downsample, PatchSizeOneIsIdentity) {
  const auto values = RandomValues(8 * 8, 3);
  const RelevanceMap p = DownsampleToPatches(RelevanceMap::FromPixels({8, 8}, values, 2, "t"), 1);
  ASSERT_EQ(p.size(), 64);
  for (int i = 0; i < 64; ++i) EXPECT_EQ(p.values()[i], values[i]);
  EXPECT_EQ(p.target_class(), 2);
}

TEST(Downsample, NonDivisibleGridIsCeil) {
  const RelevanceMap p =
      DownsampleToPatches(RelevanceMap::FromPixels({5, 7}, RandomValues(35, 4), 0, "t"), 2);
  EXPECT_EQ(p.rows(), 3);
  EXPECT_EQ(p.cols(), 4);
}

TEST(Downsample, RejectsBadArguments) {
  const RelevanceMap px = RelevanceMap::FromPixels({4, 4}, RandomValues(16, 5), 0, "t");
  EXPECT_THROW(DownsampleToPatches(px, 0), ArgumentError);
  EXPECT_THROW(DownsampleToPatches(px, 5), ArgumentError);
  const RelevanceMap patches = DownsampleToPatches(px, 2);
  EXPECT_THROW(DownsampleToPatches(patches, 2), ArgumentError);
}

TEST(RelevanceMap, ValidatesConstruction) {
  EXPECT_THROW(RelevanceMap::FromPixels({2, 2}, {1, 2, 3}, 0, "t"), ConstructionError);
  EXPECT_THROW(RelevanceMap::FromPixels({2, 2}, {1, 2, 3, std::nan("")}, 0, "t"),
               ConstructionError);
  EXPECT_THROW(RelevanceMap(3, 3, std::vector<double>(9), Resolution::kPatch, 2, {4, 4}, 0, "t"),
               ConstructionError);
  EXPECT_NO_THROW(
      RelevanceMap(2, 2, std::vector<double>(4), Resolution::kPatch, 2, {4, 4}, 0, "t"));
}

}  // namespace
}  // namespace perturbench
