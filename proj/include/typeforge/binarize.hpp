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

#ifndef TYPEFORGE_BINARIZE_HPP_
#define TYPEFORGE_BINARIZE_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "typeforge/errors.hpp"
#include "typeforge/image.hpp"

namespace typeforge {

// Exhaustive between-class-variance scan over a 256-bin histogram. Returns
// the smallest maximizing threshold t (class 0 = bins <= t), or -1 when no
// split leaves both classes non-empty. Bin values are taken as the bin index;
// any affine remapping of the values leaves the argmax unchanged.
inline int otsu_scan_histogram(const std::array<std::uint64_t, 256>& hist) {
  std::uint64_t total = 0;
  std::uint64_t total_sum = 0;
  for (int i = 0; i < 256; ++i) {
    total += hist[i];
    total_sum += hist[i] * static_cast<std::uint64_t>(i);
  }
  int best_t = -1;
  double best_score = -1.0;
  std::uint64_t n0 = 0;
  std::uint64_t s0 = 0;
  for (int t = 0; t < 255; ++t) {
    n0 += hist[t];
    s0 += hist[t] * static_cast<std::uint64_t>(t);
    const std::uint64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double mu0 = static_cast<double>(s0) / static_cast<double>(n0);
    const double mu1 = static_cast<double>(total_sum - s0) /
                       static_cast<double>(n1);
    const double d = mu0 - mu1;
    const double score =
        static_cast<double>(n0) * static_cast<double>(n1) * d * d;
    if (score > best_score) {
      best_score = score;
      best_t = t;
    }
  }
  return best_t;
}

struct OtsuResult {
  int threshold = 0;
  BinaryImage mask;
  // True when the dark class (pixel <= threshold) is the foreground.
  bool foreground_is_dark = true;
};

// Global Otsu threshold with foreground polarity chosen as the smaller of
// the two classes (ink covers less area than paper); the dark class wins
// ties.
inline OtsuResult otsu_threshold(const GrayImage& img) {
  if (img.empty()) throw ValidationError("otsu_threshold: empty image");
  std::array<std::uint64_t, 256> hist{};
  for (std::uint8_t p : img.data) ++hist[p];
  const int t = otsu_scan_histogram(hist);
  if (t < 0) throw ConstantImageError("otsu_threshold: constant image");

  std::uint64_t n0 = 0;
  for (int i = 0; i <= t; ++i) n0 += hist[i];
  const std::uint64_t n1 = img.pixel_count() - n0;
  OtsuResult result;
  result.threshold = t;
  result.foreground_is_dark = n0 <= n1;
  result.mask = BinaryImage(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const bool dark = img.data[i] <= t;
    result.mask.data[i] = (dark == result.foreground_is_dark) ? 1 : 0;
  }
  return result;
}

// Sauvola local threshold: T = m * (1 + k * (s / r - 1)) with window mean m
// and population standard deviation s; pixel < T marks foreground. Windows
// are edge-replicated so every pixel sees a full window.
inline BinaryImage sauvola_binarize(const GrayImage& img, int window, double k,
                                    double r = 128.0) {
  if (img.empty()) throw ValidationError("sauvola_binarize: empty image");
  if (window < 3 || window % 2 == 0) {
    throw ValidationError("sauvola_binarize: window must be odd and >= 3");
  }
  if (window > img.width || window > img.height) {
    throw WindowTooLargeError("sauvola_binarize: window exceeds image");
  }
  if (k < 0.0 || k >= 1.0) {
    throw ValidationError("sauvola_binarize: k must be in [0, 1)");
  }
  if (r <= 0.0) throw ValidationError("sauvola_binarize: r must be positive");

  const int pad = window / 2;
  const int pw = img.width + 2 * pad;
  const int ph = img.height + 2 * pad;

  // Integral images over the replicate-padded input; exact in uint64.
  std::vector<std::uint64_t> isum(static_cast<std::size_t>(pw + 1) * (ph + 1),
                                  0);
  std::vector<std::uint64_t> isq(static_cast<std::size_t>(pw + 1) * (ph + 1),
                                 0);
  const auto idx = [pw](int x, int y) {
    return static_cast<std::size_t>(y) * (pw + 1) + x;
  };
  for (int y = 0; y < ph; ++y) {
    const int sy = std::clamp(y - pad, 0, img.height - 1);
    for (int x = 0; x < pw; ++x) {
      const int sx = std::clamp(x - pad, 0, img.width - 1);
      const std::uint64_t v = img.at(sx, sy);
      isum[idx(x + 1, y + 1)] = v + isum[idx(x, y + 1)] +
                                isum[idx(x + 1, y)] - isum[idx(x, y)];
      isq[idx(x + 1, y + 1)] = v * v + isq[idx(x, y + 1)] +
                               isq[idx(x + 1, y)] - isq[idx(x, y)];
    }
  }

  const double area = static_cast<double>(window) * window;
  BinaryImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      // Window in padded coordinates: [x, x + window) x [y, y + window).
      const std::uint64_t sum = isum[idx(x + window, y + window)] -
                                isum[idx(x, y + window)] -
                                isum[idx(x + window, y)] + isum[idx(x, y)];
      const std::uint64_t sq = isq[idx(x + window, y + window)] -
                               isq[idx(x, y + window)] -
                               isq[idx(x + window, y)] + isq[idx(x, y)];
      const double m = static_cast<double>(sum) / area;
      const double var = static_cast<double>(sq) / area - m * m;
      const double s = std::sqrt(std::max(0.0, var));
      const double threshold = m * (1.0 + k * (s / r - 1.0));
      out.at(x, y) = static_cast<double>(img.at(x, y)) < threshold ? 1 : 0;
    }
  }
  return out;
}

}  // namespace typeforge

#endif  // TYPEFORGE_BINARIZE_HPP_
