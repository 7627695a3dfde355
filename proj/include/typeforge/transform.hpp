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

#ifndef TYPEFORGE_TRANSFORM_HPP_
#define TYPEFORGE_TRANSFORM_HPP_

#include <cmath>
#include <cstdint>

#include "typeforge/errors.hpp"
#include "typeforge/image.hpp"

namespace typeforge {

namespace detail {

// Inverse of M = R(rotation) * Shear(shear) * Scale(scale), all about the
// image center. Zero angles and unit scale produce the exact identity, which
// makes the identity transform bit-exact.
struct InverseAffine {
  double m00, m01, m10, m11;
  double cx, cy;

  InverseAffine(double rotation_deg, double shear_deg, double scale, int w,
                int h) {
    const double kPi = 3.14159265358979323846;
    const double th = rotation_deg * kPi / 180.0;
    const double sh = std::tan(shear_deg * kPi / 180.0);
    const double c = std::cos(th);
    const double s = std::sin(th);
    // inv(M) = Scale(1/scale) * Shear(-shear) * R(-rotation)
    const double inv = 1.0 / scale;
    m00 = inv * (c - sh * (-s));
    m01 = inv * (s - sh * c);
    m10 = inv * (-s);
    m11 = inv * c;
    cx = (w - 1) * 0.5;
    cy = (h - 1) * 0.5;
  }

  void map(double x, double y, double& sx, double& sy) const {
    const double dx = x - cx;
    const double dy = y - cy;
    sx = cx + m00 * dx + m01 * dy;
    sy = cy + m10 * dx + m11 * dy;
  }
};

template <typename GetChannel>
double bilinear_sample(double sx, double sy, int w, int h, double fill,
                       const GetChannel& get) {
  const double fx0 = std::floor(sx);
  const double fy0 = std::floor(sy);
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const double ax = sx - fx0;
  const double ay = sy - fy0;
  const auto sample = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= w || y >= h) return fill;
    return get(x, y);
  };
  const double v00 = sample(x0, y0);
  const double v10 = sample(x0 + 1, y0);
  const double v01 = sample(x0, y0 + 1);
  const double v11 = sample(x0 + 1, y0 + 1);
  return v00 * (1.0 - ax) * (1.0 - ay) + v10 * ax * (1.0 - ay) +
         v01 * (1.0 - ax) * ay + v11 * ax * ay;
}

}  // namespace detail

// Rotation, horizontal shear and uniform scale about the image center,
// implemented by inverse mapping with bilinear interpolation. The output has
// the input size; samples falling outside the input take the fill value.
inline GrayImage affine_transform(const GrayImage& img, double rotation_deg,
                                  double shear_deg, double scale,
                                  std::uint8_t fill = 0) {
  if (img.empty()) throw ValidationError("affine_transform: empty image");
  if (scale <= 0.0) throw ValidationError("affine_transform: scale <= 0");
  const detail::InverseAffine inv(rotation_deg, shear_deg, scale, img.width,
                                  img.height);
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double sx, sy;
      inv.map(x, y, sx, sy);
      const double v = detail::bilinear_sample(
          sx, sy, img.width, img.height, fill,
          [&](int xx, int yy) { return static_cast<double>(img.at(xx, yy)); });
      out.at(x, y) = clamp_u8(v);
    }
  }
  return out;
}

inline RgbImage affine_transform(const RgbImage& img, double rotation_deg,
                                 double shear_deg, double scale,
                                 std::uint8_t fill = 0) {
  if (img.empty()) throw ValidationError("affine_transform: empty image");
  if (scale <= 0.0) throw ValidationError("affine_transform: scale <= 0");
  const detail::InverseAffine inv(rotation_deg, shear_deg, scale, img.width,
                                  img.height);
  RgbImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double sx, sy;
      inv.map(x, y, sx, sy);
      std::uint8_t* dst = out.px(x, y);
      for (int c = 0; c < 3; ++c) {
        const double v = detail::bilinear_sample(
            sx, sy, img.width, img.height, fill, [&](int xx, int yy) {
              return static_cast<double>(img.px(xx, yy)[c]);
            });
        dst[c] = clamp_u8(v);
      }
    }
  }
  return out;
}

template <typename Image>
Image center_crop(const Image& img, int crop_w, int crop_h) {
  if (crop_w <= 0 || crop_h <= 0) {
    throw ValidationError("center_crop: non-positive crop size");
  }
  if (crop_w > img.width || crop_h > img.height) {
    throw ImageTooSmallError("center_crop: crop larger than image");
  }
  const int x0 = (img.width - crop_w) / 2;
  const int y0 = (img.height - crop_h) / 2;
  Image out(crop_w, crop_h);
  if constexpr (std::is_same_v<Image, RgbImage>) {
    for (int y = 0; y < crop_h; ++y) {
      for (int x = 0; x < crop_w; ++x) {
        const std::uint8_t* src = img.px(x0 + x, y0 + y);
        std::uint8_t* dst = out.px(x, y);
        dst[0] = src[0];
        dst[1] = src[1];
        dst[2] = src[2];
      }
    }
  } else {
    for (int y = 0; y < crop_h; ++y) {
      for (int x = 0; x < crop_w; ++x) {
        out.at(x, y) = img.at(x0 + x, y0 + y);
      }
    }
  }
  return out;
}

}  // namespace typeforge

#endif  // TYPEFORGE_TRANSFORM_HPP_
