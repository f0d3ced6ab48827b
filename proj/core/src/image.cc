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

#include "perturbench/image.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "perturbench/errors.h"

namespace perturbench {
namespace {

void CheckDims(int height, int width) {
  if (height <= 0 || width <= 0) {
    throw ConstructionError("image dimensions must be positive, got " +
                            std::to_string(height) + "x" +
                            std::to_string(width));
  }
}

// OpenCV views over our buffers. The returned Mat aliases `image`.
cv::Mat AsMat(const Image& image) {
  return cv::Mat(image.height(), image.width(), CV_8UC3,
                 const_cast<uint8_t*>(image.bytes().data()));
}

Image FromRgbMat(const cv::Mat& rgb) {
  cv::Mat contiguous = rgb.isContinuous() ? rgb : rgb.clone();
  const auto* begin = contiguous.ptr<uint8_t>();
  std::vector<uint8_t> data(begin, begin + contiguous.total() * 3);
  return Image(contiguous.rows, contiguous.cols, std::move(data));
}

std::string Encode(const cv::Mat& mat, const std::vector<int>& params) {
  std::vector<uchar> buffer;
  if (!cv::imencode(".png", mat, buffer, params)) {
    throw Error("PNG encoding failed");
  }
  return std::string(buffer.begin(), buffer.end());
}

cv::Mat Decode(std::string_view png, int flags) {
  std::vector<uchar> buffer(png.begin(), png.end());
  cv::Mat mat = cv::imdecode(buffer, flags);
  if (mat.empty()) throw Error("PNG decoding failed");
  return mat;
}

}  // namespace

Image::Image(int height, int width, uint8_t fill) : height_(height), width_(width) {
  CheckDims(height, width);
  data_.assign(static_cast<size_t>(height) * width * kChannels, fill);
}

Image::Image(int height, int width, std::vector<uint8_t> rgb)
    : height_(height), width_(width), data_(std::move(rgb)) {
  CheckDims(height, width);
  if (data_.size() != static_cast<size_t>(height) * width * kChannels) {
    throw ConstructionError("RGB buffer size does not match image dimensions");
  }
}

PixelMask::PixelMask(int height, int width, bool fill)
    : height_(height), width_(width) {
  CheckDims(height, width);
  bits_.assign(static_cast<size_t>(height) * width, fill ? 1 : 0);
}

int64_t PixelMask::count() const {
  return std::count(bits_.begin(), bits_.end(), uint8_t{1});
}

PixelMask PixelMask::inverted() const {
  PixelMask out = *this;
  for (auto& b : out.bits_) b = b ? 0 : 1;
  return out;
}

std::string EncodePng(const Image& image) {
  cv::Mat bgr;
  cv::cvtColor(AsMat(image), bgr, cv::COLOR_RGB2BGR);
  return Encode(bgr, {cv::IMWRITE_PNG_COMPRESSION, 6});
}

Image DecodePng(std::string_view png) {
  cv::Mat bgr = Decode(png, cv::IMREAD_COLOR);
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return FromRgbMat(rgb);
}

Image ReadPng(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open image " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return DecodePng(bytes);
}

void WritePng(const Image& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write image " + path);
  const std::string png = EncodePng(image);
  out.write(png.data(), static_cast<std::streamsize>(png.size()));
}

std::string EncodeMaskPng(const PixelMask& mask) {
  cv::Mat gray(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      gray.at<uint8_t>(y, x) = mask.get(y, x) ? 255 : 0;
    }
  }
  return Encode(gray, {cv::IMWRITE_PNG_BILEVEL, 1});
}

PixelMask DecodeMaskPng(std::string_view png) {
  cv::Mat gray = Decode(png, cv::IMREAD_GRAYSCALE);
  PixelMask mask(gray.rows, gray.cols);
  for (int y = 0; y < gray.rows; ++y) {
    for (int x = 0; x < gray.cols; ++x) {
      mask.set(y, x, gray.at<uint8_t>(y, x) >= 128);
    }
  }
  return mask;
}

Image ResizeBilinear(const Image& image, Shape size) {
  CheckDims(size.height, size.width);
  if (image.shape() == size) return image;
  cv::Mat out;
  cv::resize(AsMat(image), out, cv::Size(size.width, size.height), 0, 0,
             cv::INTER_LINEAR);
  return FromRgbMat(out);
}

PixelMask ResizeNearest(const PixelMask& mask, Shape size) {
  CheckDims(size.height, size.width);
  if (mask.shape() == size) return mask;
  PixelMask out(size.height, size.width);
  // Pixel-centre mapping; cv::INTER_NEAREST uses floor(dst*scale), which is
  // biased towards the top-left for upscaling.
  for (int y = 0; y < size.height; ++y) {
    const int sy = std::min(
        mask.height() - 1,
        static_cast<int>((y + 0.5) * mask.height() / size.height));
    for (int x = 0; x < size.width; ++x) {
      const int sx = std::min(
          mask.width() - 1,
          static_cast<int>((x + 0.5) * mask.width() / size.width));
      out.set(y, x, mask.get(sy, sx));
    }
  }
  return out;
}

Image Crop(const Image& image, const Rect& rect) {
  if (rect.height <= 0 || rect.width <= 0 || rect.top < 0 || rect.left < 0 ||
      rect.bottom() > image.height() || rect.right() > image.width()) {
    throw ArgumentError("crop rectangle outside image bounds");
  }
  Image out(rect.height, rect.width);
  for (int y = 0; y < rect.height; ++y) {
    const auto src = image.bytes().subspan(
        (static_cast<size_t>(rect.top + y) * image.width() + rect.left) *
            Image::kChannels,
        static_cast<size_t>(rect.width) * Image::kChannels);
    std::copy(src.begin(), src.end(),
              out.mutable_bytes().begin() +
                  static_cast<ptrdiff_t>(y) * rect.width * Image::kChannels);
  }
  return out;
}

}  // namespace perturbench
