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

#ifndef TYPEFORGE_JITTER_HPP_
#define TYPEFORGE_JITTER_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "typeforge/errors.hpp"
#include "typeforge/image.hpp"
#include "typeforge/rng.hpp"

namespace typeforge {

// Maximum deviations; a factor f samples the multiplier from
// [max(0, 1 - f), 1 + f], hue (in turns) from [-hue, +hue].
struct JitterFactors {
  double brightness = 0.7;
  double contrast = 0.7;
  double saturation = 0.3;
  double hue = 0.03;
};

struct JitterParams {
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue = 0.0;
  // Application order over {0: brightness, 1: contrast, 2: saturation,
  // 3: hue}.
  std::array<int, 4> order = {0, 1, 2, 3};
};

// Draw order is fixed (brightness, contrast, saturation, hue, then the
// permutation) so a given rng state always yields the same params.
inline JitterParams sample_jitter_params(const JitterFactors& f, Rng& rng) {
  if (f.brightness < 0.0 || f.contrast < 0.0 || f.saturation < 0.0 ||
      f.hue < 0.0 || f.hue > 0.5) {
    throw ValidationError("sample_jitter_params: factor out of range");
  }
  JitterParams p;
  p.brightness = rng.uniform(std::max(0.0, 1.0 - f.brightness),
                             1.0 + f.brightness);
  p.contrast = rng.uniform(std::max(0.0, 1.0 - f.contrast), 1.0 + f.contrast);
  p.saturation = rng.uniform(std::max(0.0, 1.0 - f.saturation),
                             1.0 + f.saturation);
  p.hue = rng.uniform(-f.hue, f.hue);
  std::vector<int> order(4);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::copy(order.begin(), order.end(), p.order.begin());
  return p;
}

namespace detail {

inline void rgb_to_hsv(double r, double g, double b, double& h, double& s,
                       double& v) {
  const double maxc = std::max({r, g, b});
  const double minc = std::min({r, g, b});
  v = maxc;
  const double delta = maxc - minc;
  s = maxc > 0.0 ? delta / maxc : 0.0;
  if (delta <= 0.0) {
    h = 0.0;
    return;
  }
  double hh;
  if (r == maxc) {
    hh = (g - b) / delta;
  } else if (g == maxc) {
    hh = 2.0 + (b - r) / delta;
  } else {
    hh = 4.0 + (r - g) / delta;
  }
  h = hh / 6.0;
  h -= std::floor(h);
}

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g,
                       double& b) {
  h -= std::floor(h);
  const double h6 = h * 6.0;
  const int i = std::min(5, static_cast<int>(h6));
  const double f = h6 - i;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

inline void jitter_brightness(RgbImage& img, double factor) {
  for (auto& v : img.data) {
    v = clamp_u8(static_cast<double>(v) * factor);
  }
}

inline void jitter_contrast(RgbImage& img, double factor) {
  // Blend toward the mean luma of the current image.
  double mean = 0.0;
  for (std::size_t i = 0; i < img.data.size(); i += 3) {
    mean += 0.299 * img.data[i] + 0.587 * img.data[i + 1] +
            0.114 * img.data[i + 2];
  }
  mean /= static_cast<double>(img.pixel_count());
  for (auto& v : img.data) {
    v = clamp_u8(factor * static_cast<double>(v) + (1.0 - factor) * mean);
  }
}

inline void jitter_saturation(RgbImage& img, double factor) {
  // Blend each pixel toward its own luma.
  for (std::size_t i = 0; i < img.data.size(); i += 3) {
    const double luma = 0.299 * img.data[i] + 0.587 * img.data[i + 1] +
                        0.114 * img.data[i + 2];
    for (int c = 0; c < 3; ++c) {
      img.data[i + c] = clamp_u8(factor * img.data[i + c] +
                                 (1.0 - factor) * luma);
    }
  }
}

inline void jitter_hue(RgbImage& img, double hue_shift_turns) {
  // Exact zero shift is the identity; skipping keeps it bit-exact.
  if (hue_shift_turns == 0.0) return;
  for (std::size_t i = 0; i < img.data.size(); i += 3) {
    const double r = img.data[i] / 255.0;
    const double g = img.data[i + 1] / 255.0;
    const double b = img.data[i + 2] / 255.0;
    double h, s, v;
    rgb_to_hsv(r, g, b, h, s, v);
    double ro, go, bo;
    hsv_to_rgb(h + hue_shift_turns, s, v, ro, go, bo);
    img.data[i] = clamp_u8(ro * 255.0);
    img.data[i + 1] = clamp_u8(go * 255.0);
    img.data[i + 2] = clamp_u8(bo * 255.0);
  }
}

}  // namespace detail

inline RgbImage apply_color_jitter(const RgbImage& img,
                                   const JitterParams& p) {
  if (img.empty()) throw ValidationError("apply_color_jitter: empty image");
  RgbImage out = img;
  for (int op : p.order) {
    switch (op) {
      case 0: detail::jitter_brightness(out, p.brightness); break;
      case 1: detail::jitter_contrast(out, p.contrast); break;
      case 2: detail::jitter_saturation(out, p.saturation); break;
      case 3: detail::jitter_hue(out, p.hue); break;
      default: throw ValidationError("apply_color_jitter: bad op id");
    }
  }
  return out;
}

inline RgbImage color_jitter(const RgbImage& img, const JitterFactors& f,
                             Rng& rng) {
  return apply_color_jitter(img, sample_jitter_params(f, rng));
}

}  // namespace typeforge

#endif  // TYPEFORGE_JITTER_HPP_
