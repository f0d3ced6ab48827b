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

#include "perturbench/plot.h"

#include <array>
#include <cstdio>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "perturbench/errors.h"

namespace perturbench {
namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 440;
constexpr int kLeft = 60, kRight = 180, kTop = 40, kBottom = 50;

// BGR
constexpr std::array<std::array<int, 3>, 8> kPalette = {{{180, 119, 31},
                                                         {14, 127, 255},
                                                         {44, 160, 44},
                                                         {40, 39, 214},
                                                         {189, 103, 148},
                                                         {75, 86, 140},
                                                         {194, 119, 227},
                                                         {34, 189, 188}}};

cv::Mat RenderPanel(const MetricSummary& metric) {
  cv::Mat img(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));
  const int plot_w = kWidth - kLeft - kRight;
  const int plot_h = kHeight - kTop - kBottom;
  const double x_lo = metric.steps.front();
  const double x_hi = metric.steps.size() > 1 ? metric.steps.back() : x_lo + 1.0;
  auto px = [&](double x, double y) {
    return cv::Point(kLeft + static_cast<int>((x - x_lo) / (x_hi - x_lo) * plot_w + 0.5),
                     kTop + static_cast<int>((1.0 - y) * plot_h + 0.5));
  };
  const auto font = cv::FONT_HERSHEY_SIMPLEX;
  const cv::Scalar ink(40, 40, 40), grid(225, 225, 225);

  for (int i = 0; i <= 4; ++i) {
    const double y = i / 4.0;
    cv::line(img, px(x_lo, y), px(x_hi, y), grid, 1);
    char label[16];
    std::snprintf(label, sizeof(label), "%.2f", y);
    cv::putText(img, label, px(x_lo, y) + cv::Point(-48, 5), font, 0.4, ink, 1, cv::LINE_AA);
  }
  for (double s : metric.steps) {
    cv::line(img, px(s, 0.0), px(s, 0.0) + cv::Point(0, 5), ink, 1);
    char label[16];
    std::snprintf(label, sizeof(label), "%.2f", s);
    cv::putText(img, label, px(s, 0.0) + cv::Point(-14, 20), font, 0.4, ink, 1, cv::LINE_AA);
  }
  cv::rectangle(img, px(x_lo, 1.0), px(x_hi, 0.0), ink, 1);
  cv::putText(img, metric.metric_id, cv::Point(kLeft, kTop - 14), font, 0.6, ink, 1, cv::LINE_AA);
  cv::putText(img, "p", cv::Point(kLeft + plot_w / 2, kHeight - 12), font, 0.5, ink, 1,
              cv::LINE_AA);

  int i = 0;
  for (const auto& [method, summary] : metric.methods) {
    const auto& c = kPalette[static_cast<size_t>(i) % kPalette.size()];
    const cv::Scalar color(c[0], c[1], c[2]);
    const auto& ys = summary.curve.mean_scores;
    for (size_t k = 0; k < ys.size(); ++k) {
      const cv::Point p = px(metric.steps[k], ys[k]);
      cv::circle(img, p, 3, color, cv::FILLED, cv::LINE_AA);
      if (k > 0) cv::line(img, px(metric.steps[k - 1], ys[k - 1]), p, color, 2, cv::LINE_AA);
    }
    const cv::Point key(kWidth - kRight + 12, kTop + 10 + 20 * i);
    cv::line(img, key, key + cv::Point(20, 0), color, 2, cv::LINE_AA);
    cv::putText(img, method, key + cv::Point(26, 4), font, 0.4, ink, 1, cv::LINE_AA);
    ++i;
  }
  return img;
}

void Write(const std::filesystem::path& path, const cv::Mat& img) {
  if (!cv::imwrite(path.string(), img)) throw Error("cannot write plot " + path.string());
}

}  // namespace

void PlotMetric(const MetricSummary& metric, const std::filesystem::path& png) {
  if (metric.steps.empty()) throw ArgumentError("metric has no steps to plot");
  Write(png, RenderPanel(metric));
}

std::vector<std::filesystem::path> PlotReport(const EvaluationReport& report,
                                              const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  std::vector<cv::Mat> panels;
  for (const auto& [id, metric] : report.metrics) {
    if (metric.steps.empty()) continue;
    panels.push_back(RenderPanel(metric));
    written.push_back(out_dir / ("plot_" + id + ".png"));
    Write(written.back(), panels.back());
  }
  if (!panels.empty()) {
    cv::Mat combined;
    cv::hconcat(panels, combined);
    written.push_back(out_dir / "curves.png");
    Write(written.back(), combined);
  }
  return written;
}

}  // namespace perturbench
