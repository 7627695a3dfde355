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

#ifndef TYPEFORGE_FILTERS_HPP_
#define TYPEFORGE_FILTERS_HPP_

#include <cmath>
#include <vector>

#include "typeforge/image.hpp"

namespace typeforge {

inline std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) /
                              (2.0 * sigma * sigma));
    k[i + radius] = v;
    sum += v;
  }
  std::vector<float> out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    out[i] = static_cast<float>(k[i] / sum);
  }
  return out;
}

// Separable Gaussian blur with replicated borders.
inline FloatImage gaussian_blur(const FloatImage& img, double sigma) {
  if (img.empty()) throw ValidationError("gaussian_blur: empty image");
  if (sigma <= 0.0) return img;
  const std::vector<float> kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size()) / 2;
  const int w = img.width;
  const int h = img.height;

  FloatImage tmp(w, h);
  for (int y = 0; y < h; ++y) {
    const float* row = img.data.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = std::clamp(x + i, 0, w - 1);
        acc += kernel[i + radius] * row[xx];
      }
      tmp.at(x, y) = acc;
    }
  }
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = std::clamp(y + i, 0, h - 1);
        acc += kernel[i + radius] * tmp.at(x, yy);
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

// 3x3 Sobel pair with replicated borders. gy is the derivative in the
// downward direction (row index increasing), matching the y-down image frame
// used across the feature code.
inline void sobel(const FloatImage& img, FloatImage& gx, FloatImage& gy) {
  if (img.empty()) throw ValidationError("sobel: empty image");
  const int w = img.width;
  const int h = img.height;
  gx = FloatImage(w, h);
  gy = FloatImage(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float tl = img.at_clamped(x - 1, y - 1);
      const float tc = img.at_clamped(x, y - 1);
      const float tr = img.at_clamped(x + 1, y - 1);
      const float ml = img.at_clamped(x - 1, y);
      const float mr = img.at_clamped(x + 1, y);
      const float bl = img.at_clamped(x - 1, y + 1);
      const float bc = img.at_clamped(x, y + 1);
      const float br = img.at_clamped(x + 1, y + 1);
      gx.at(x, y) = (tr + 2.0f * mr + br) - (tl + 2.0f * ml + bl);
      gy.at(x, y) = (bl + 2.0f * bc + br) - (tl + 2.0f * tc + tr);
    }
  }
}

// Keeps every other pixel; used between scale-space octaves.
inline FloatImage downsample2(const FloatImage& img) {
  const int w = std::max(1, img.width / 2);
  const int h = std::max(1, img.height / 2);
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(x, y) = img.at(2 * x, 2 * y);
    }
  }
  return out;
}

inline FloatImage upsample2_bilinear(const FloatImage& img) {
  const int w = img.width * 2;
  const int h = img.height * 2;
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const float sy = static_cast<float>(y) * 0.5f;
    const int y0 = static_cast<int>(sy);
    const float fy = sy - static_cast<float>(y0);
    for (int x = 0; x < w; ++x) {
      const float sx = static_cast<float>(x) * 0.5f;
      const int x0 = static_cast<int>(sx);
      const float fx = sx - static_cast<float>(x0);
      const float v00 = img.at_clamped(x0, y0);
      const float v10 = img.at_clamped(x0 + 1, y0);
      const float v01 = img.at_clamped(x0, y0 + 1);
      const float v11 = img.at_clamped(x0 + 1, y0 + 1);
      out.at(x, y) = v00 * (1.0f - fx) * (1.0f - fy) + v10 * fx * (1.0f - fy) +
                     v01 * (1.0f - fx) * fy + v11 * fx * fy;
    }
  }
  return out;
}

}  // namespace typeforge

#endif  // TYPEFORGE_FILTERS_HPP_
