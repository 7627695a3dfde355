/*
 * Copyright 2026 The typeforge authors
 *
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

#ifndef TYPEFORGE_IMAGE_HPP_
#define TYPEFORGE_IMAGE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "typeforge/errors.hpp"

namespace typeforge {

// 8-bit single-channel image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h) {
    if (w <= 0 || h <= 0) throw ValidationError("GrayImage: non-positive size");
    data.assign(static_cast<std::size_t>(w) * h, fill);
  }

  bool empty() const { return data.empty(); }
  std::size_t pixel_count() const { return data.size(); }

  std::uint8_t& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

// 8-bit RGB image, row-major, interleaved channels.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t r = 0, std::uint8_t g = 0,
           std::uint8_t b = 0)
      : width(w), height(h) {
    if (w <= 0 || h <= 0) throw ValidationError("RgbImage: non-positive size");
    data.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < data.size(); i += 3) {
      data[i] = r;
      data[i + 1] = g;
      data[i + 2] = b;
    }
  }

  bool empty() const { return data.empty(); }
  std::size_t pixel_count() const { return data.size() / 3; }

  std::uint8_t* px(int x, int y) {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* px(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

// Binary mask, row-major; 1 = foreground (ink), 0 = background.
struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  BinaryImage() = default;
  BinaryImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h) {
    if (w <= 0 || h <= 0)
      throw ValidationError("BinaryImage: non-positive size");
    data.assign(static_cast<std::size_t>(w) * h, fill);
  }

  std::uint8_t& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }

  std::size_t count_foreground() const {
    std::size_t n = 0;
    for (std::uint8_t v : data) n += v != 0;
    return n;
  }
};

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(
      std::lround(std::min(255.0, std::max(0.0, v))));
}

// BT.601 luma, rounded to nearest.
inline std::uint8_t luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return clamp_u8(0.299 * r + 0.587 * g + 0.114 * b);
}

inline GrayImage to_grayscale(const RgbImage& rgb) {
  if (rgb.empty()) throw ValidationError("to_grayscale: empty image");
  GrayImage out(rgb.width, rgb.height);
  const std::uint8_t* p = rgb.data.data();
  for (std::size_t i = 0; i < out.data.size(); ++i, p += 3) {
    out.data[i] = luma601(p[0], p[1], p[2]);
  }
  return out;
}

inline RgbImage to_rgb(const GrayImage& gray) {
  if (gray.empty()) throw ValidationError("to_rgb: empty image");
  RgbImage out(gray.width, gray.height);
  for (std::size_t i = 0; i < gray.data.size(); ++i) {
    out.data[3 * i] = gray.data[i];
    out.data[3 * i + 1] = gray.data[i];
    out.data[3 * i + 2] = gray.data[i];
  }
  return out;
}

inline bool is_constant(const GrayImage& img) {
  if (img.empty()) return true;
  const std::uint8_t v = img.data[0];
  for (std::uint8_t p : img.data) {
    if (p != v) return false;
  }
  return true;
}

// Float-valued plane used by the filtering and feature code.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  FloatImage() = default;
  FloatImage(int w, int h, float fill = 0.0f) : width(w), height(h) {
    if (w <= 0 || h <= 0)
      throw ValidationError("FloatImage: non-positive size");
    data.assign(static_cast<std::size_t>(w) * h, fill);
  }

  bool empty() const { return data.empty(); }

  float& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  float at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }

  // Replicate-border read.
  float at_clamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return at(x, y);
  }
};

// scale = 1/255 maps to the [0,1] range the feature code works in.
inline FloatImage to_float(const GrayImage& img, float scale = 1.0f) {
  if (img.empty()) throw ValidationError("to_float: empty image");
  FloatImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = static_cast<float>(img.data[i]) * scale;
  }
  return out;
}

}  // namespace typeforge

#endif  // TYPEFORGE_IMAGE_HPP_
