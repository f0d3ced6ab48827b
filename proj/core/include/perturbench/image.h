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

#ifndef PERTURBENCH_IMAGE_H_
#define PERTURBENCH_IMAGE_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace perturbench {

struct Shape {
  int height = 0;
  int width = 0;

  int64_t area() const { return int64_t{height} * width; }
  bool operator==(const Shape&) const = default;
};

// Axis-aligned pixel rectangle, half-open on the right and bottom.
struct Rect {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  int bottom() const { return top + height; }  // exclusive
  int right() const { return left + width; }   // exclusive
  bool operator==(const Rect&) const = default;
};

// 8-bit interleaved RGB image. This is the only image representation the
// pipeline exchanges between backends.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width, uint8_t fill = 0);
  Image(int height, int width, std::vector<uint8_t> rgb);

  int height() const { return height_; }
  int width() const { return width_; }
  Shape shape() const { return {height_, width_}; }
  bool empty() const { return data_.empty(); }

  uint8_t& at(int y, int x, int c) {
    return data_[(static_cast<size_t>(y) * width_ + x) * kChannels + c];
  }
  uint8_t at(int y, int x, int c) const {
    return data_[(static_cast<size_t>(y) * width_ + x) * kChannels + c];
  }

  std::span<const uint8_t> bytes() const { return data_; }
  std::span<uint8_t> mutable_bytes() { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<uint8_t> data_;
};

// Boolean per-pixel grid. Used both for "pixels to perturb" masks and for the
// inpainter's keep mask, depending on context.
class PixelMask {
 public:
  PixelMask() = default;
  PixelMask(int height, int width, bool fill = false);

  int height() const { return height_; }
  int width() const { return width_; }
  Shape shape() const { return {height_, width_}; }

  bool get(int y, int x) const {
    return bits_[static_cast<size_t>(y) * width_ + x] != 0;
  }
  void set(int y, int x, bool v) {
    bits_[static_cast<size_t>(y) * width_ + x] = v ? 1 : 0;
  }

  int64_t count() const;
  PixelMask inverted() const;
  std::span<const uint8_t> bits() const { return bits_; }

  bool operator==(const PixelMask&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<uint8_t> bits_;
};

std::string EncodePng(const Image& image);
Image DecodePng(std::string_view png);
Image ReadPng(const std::string& path);
void WritePng(const Image& image, const std::string& path);

// Masks are stored as 1-bit grayscale PNG; set pixels are white.
std::string EncodeMaskPng(const PixelMask& mask);
PixelMask DecodeMaskPng(std::string_view png);

// Half-pixel-centred bilinear resampling.
Image ResizeBilinear(const Image& image, Shape size);
PixelMask ResizeNearest(const PixelMask& mask, Shape size);

Image Crop(const Image& image, const Rect& rect);

}  // namespace perturbench

#endif  // PERTURBENCH_IMAGE_H_
