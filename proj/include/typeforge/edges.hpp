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

#ifndef TYPEFORGE_EDGES_HPP_
#define TYPEFORGE_EDGES_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "typeforge/binarize.hpp"
#include "typeforge/errors.hpp"
#include "typeforge/filters.hpp"
#include "typeforge/image.hpp"

namespace typeforge {

struct CannyConfig {
  double sigma = 1.4;  // Gaussian smoothing before the Sobel pair
};

namespace detail {

// Smoothed Sobel gradients on the 0..255 intensity scale; shared between
// canny, auto_hysteresis and the contour sampler so their magnitudes agree.
inline void smoothed_gradients(const GrayImage& img, double sigma,
                               FloatImage& gx, FloatImage& gy) {
  const FloatImage smooth = gaussian_blur(to_float(img), sigma);
  sobel(smooth, gx, gy);
}

inline FloatImage gradient_magnitude(const FloatImage& gx,
                                     const FloatImage& gy) {
  FloatImage mag(gx.width, gx.height);
  for (std::size_t i = 0; i < mag.data.size(); ++i) {
    mag.data[i] = std::sqrt(gx.data[i] * gx.data[i] +
                            gy.data[i] * gy.data[i]);
  }
  return mag;
}

}  // namespace detail

struct HysteresisThresholds {
  double low = 0.0;
  double high = 0.0;
};

// Picks the high threshold by an Otsu split of the gradient-magnitude
// histogram (256 uniform bins up to the max magnitude); low = 0.4 * high.
inline HysteresisThresholds auto_hysteresis(const GrayImage& img,
                                            const CannyConfig& cfg = {}) {
  if (img.empty()) throw ValidationError("auto_hysteresis: empty image");
  if (is_constant(img)) {
    throw ConstantImageError("auto_hysteresis: constant image");
  }
  FloatImage gx, gy;
  detail::smoothed_gradients(img, cfg.sigma, gx, gy);
  const FloatImage mag = detail::gradient_magnitude(gx, gy);
  float max_mag = 0.0f;
  for (float v : mag.data) max_mag = std::max(max_mag, v);
  if (max_mag <= 0.0f) {
    throw ConstantImageError("auto_hysteresis: zero gradient field");
  }
  std::array<std::uint64_t, 256> hist{};
  for (float v : mag.data) {
    const int bin = std::min(
        255, static_cast<int>(static_cast<double>(v) / max_mag * 256.0));
    ++hist[bin];
  }
  const int t = otsu_scan_histogram(hist);
  HysteresisThresholds out;
  if (t < 0) {
    // All magnitudes fell into one bin; any threshold below it keeps them.
    out.high = 0.5 * static_cast<double>(max_mag);
  } else {
    // Lower edge of the first bin above the split, so the threshold
    // separates the two magnitude populations.
    out.high = static_cast<double>(t + 1) * static_cast<double>(max_mag) /
               256.0;
  }
  out.low = 0.4 * out.high;
  return out;
}

// Canny edge mask: Gaussian smoothing, Sobel gradients, non-maximum
// suppression quantized to 4 directions, then hysteresis linking (strong
// pixels seed an 8-connected flood over weak ones).
inline BinaryImage canny(const GrayImage& img, double low, double high,
                         const CannyConfig& cfg = {}) {
  if (img.empty()) throw ValidationError("canny: empty image");
  if (low < 0.0 || high < low) {
    throw ValidationError("canny: need 0 <= low <= high");
  }
  const int w = img.width;
  const int h = img.height;
  FloatImage gx, gy;
  detail::smoothed_gradients(img, cfg.sigma, gx, gy);
  const FloatImage mag = detail::gradient_magnitude(gx, gy);

  const auto mag_at = [&](int x, int y) -> float {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0f;
    return mag.at(x, y);
  };

  // 0 = suppressed, 1 = weak, 2 = strong.
  std::vector<std::uint8_t> grade(static_cast<std::size_t>(w) * h, 0);
  constexpr float kTan22 = 0.41421356f;  // tan(22.5 deg)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float m = mag.at(x, y);
      if (static_cast<double>(m) < low || m <= 0.0f) continue;
      const float ax = std::fabs(gx.at(x, y));
      const float ay = std::fabs(gy.at(x, y));
      int dx, dy;
      if (ay <= ax * kTan22) {
        dx = 1;
        dy = 0;
      } else if (ax <= ay * kTan22) {
        dx = 0;
        dy = 1;
      } else if ((gx.at(x, y) > 0.0f) == (gy.at(x, y) > 0.0f)) {
        dx = 1;
        dy = 1;
      } else {
        dx = 1;
        dy = -1;
      }
      // Asymmetric tie-break keeps exactly one pixel on two-wide plateaus.
      if (m > mag_at(x - dx, y - dy) && m >= mag_at(x + dx, y + dy)) {
        grade[static_cast<std::size_t>(y) * w + x] =
            static_cast<double>(m) >= high ? 2 : 1;
      }
    }
  }

  BinaryImage out(w, h);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (grade[static_cast<std::size_t>(y) * w + x] != 2 ||
          out.at(x, y) != 0) {
        continue;
      }
      stack.emplace_back(x, y);
      out.at(x, y) = 1;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int oy = -1; oy <= 1; ++oy) {
          for (int ox = -1; ox <= 1; ++ox) {
            const int nx = cx + ox;
            const int ny = cy + oy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (out.at(nx, ny) != 0) continue;
            if (grade[static_cast<std::size_t>(ny) * w + nx] == 0) continue;
            out.at(nx, ny) = 1;
            stack.emplace_back(nx, ny);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace typeforge

#endif  // TYPEFORGE_EDGES_HPP_
