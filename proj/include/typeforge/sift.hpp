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

#ifndef TYPEFORGE_SIFT_HPP_
#define TYPEFORGE_SIFT_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "typeforge/errors.hpp"
#include "typeforge/filters.hpp"
#include "typeforge/image.hpp"

namespace typeforge {

struct SiftConfig {
  int octave_layers = 3;            // DoG layers probed per octave
  double contrast_threshold = 0.04; // on the [0,1] intensity scale
  double edge_threshold = 10.0;     // principal curvature ratio bound
  double sigma = 1.6;               // base scale of octave 0
  bool upsample_first = false;      // double the input before octave 0
  int border = 5;                   // extrafoliation margin, pixels
};

// Position and scale in original-image pixels. orientation is the gradient
// frame angle in radians, [0, 2*pi), with the y axis pointing down.
struct Keypoint {
  float x = 0.0f;
  float y = 0.0f;
  float scale = 0.0f;
  float orientation = 0.0f;
};

// Gaussian scale space plus its difference levels, shared by the detector
// and the descriptor so both sample the same images.
class GaussianPyramid {
 public:
  GaussianPyramid(const GrayImage& img, const SiftConfig& cfg) : cfg_(cfg) {
    if (cfg.octave_layers < 1) {
      throw ValidationError("GaussianPyramid: octave_layers < 1");
    }
    if (cfg.sigma <= 0.0) throw ValidationError("GaussianPyramid: sigma <= 0");
    FloatImage base = to_float(img, 1.0f / 255.0f);
    double assumed = 0.5;  // nominal blur of the raw input
    if (cfg.upsample_first) {
      base = upsample2_bilinear(base);
      assumed = 1.0;
    }
    const double delta =
        std::sqrt(std::max(cfg.sigma * cfg.sigma - assumed * assumed, 0.01));
    base = gaussian_blur(base, delta);

    n_octaves_ = 1;
    while ((std::min(base.width, base.height) >> n_octaves_) >= 16) {
      ++n_octaves_;
    }

    const int s = cfg.octave_layers;
    const double k = std::pow(2.0, 1.0 / s);
    std::vector<double> diff(s + 3, 0.0);
    for (int i = 1; i < s + 3; ++i) {
      const double prev = cfg.sigma * std::pow(k, i - 1);
      diff[i] = prev * std::sqrt(k * k - 1.0);
    }

    gauss_.resize(n_octaves_);
    dog_.resize(n_octaves_);
    for (int o = 0; o < n_octaves_; ++o) {
      gauss_[o].resize(s + 3);
      gauss_[o][0] = o == 0 ? std::move(base) : downsample2(gauss_[o - 1][s]);
      for (int i = 1; i < s + 3; ++i) {
        gauss_[o][i] = gaussian_blur(gauss_[o][i - 1], diff[i]);
      }
      dog_[o].resize(s + 2);
      for (int i = 0; i < s + 2; ++i) {
        const FloatImage& a = gauss_[o][i];
        const FloatImage& b = gauss_[o][i + 1];
        FloatImage d(a.width, a.height);
        for (std::size_t p = 0; p < d.data.size(); ++p) {
          d.data[p] = b.data[p] - a.data[p];
        }
        dog_[o][i] = std::move(d);
      }
    }
  }

  const SiftConfig& config() const { return cfg_; }
  int octaves() const { return n_octaves_; }
  const FloatImage& gauss(int o, int i) const { return gauss_[o][i]; }
  const FloatImage& dog(int o, int i) const { return dog_[o][i]; }

  // Original-image pixels per pixel of octave o.
  double pixel_scale(int o) const {
    return (cfg_.upsample_first ? 0.5 : 1.0) * static_cast<double>(1 << o);
  }

 private:
  SiftConfig cfg_;
  int n_octaves_ = 0;
  std::vector<std::vector<FloatImage>> gauss_;
  std::vector<std::vector<FloatImage>> dog_;
};

namespace detail {

constexpr double kPi = 3.14159265358979323846;

inline float wrap_angle(float a) {
  const float tau = static_cast<float>(2.0 * kPi);
  a = std::fmod(a, tau);
  if (a < 0.0f) a += tau;
  if (a >= tau) a = 0.0f;
  return a;
}

// 36-bin gradient orientation histogram around (cx, cy) on one Gaussian
// level; returns peak orientations (>= 80% of the max, local maxima, with
// parabolic refinement).
inline std::vector<float> orientation_peaks(const FloatImage& img, int cx,
                                            int cy, double sigma_octave) {
  constexpr int kBins = 36;
  const int radius = static_cast<int>(std::lround(4.5 * sigma_octave));
  const double weight_denom = 2.0 * (1.5 * sigma_octave) * (1.5 * sigma_octave);
  std::array<double, kBins> hist{};
  for (int dy = -radius; dy <= radius; ++dy) {
    const int y = cy + dy;
    if (y < 1 || y >= img.height - 1) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cx + dx;
      if (x < 1 || x >= img.width - 1) continue;
      const float gx = img.at(x + 1, y) - img.at(x - 1, y);
      const float gy = img.at(x, y + 1) - img.at(x, y - 1);
      const double mag = std::sqrt(static_cast<double>(gx) * gx +
                                   static_cast<double>(gy) * gy);
      const double ang = std::atan2(static_cast<double>(gy),
                                    static_cast<double>(gx));
      const double w = std::exp(-(static_cast<double>(dx) * dx +
                                  static_cast<double>(dy) * dy) /
                                weight_denom);
      int bin = static_cast<int>(
          std::lround(ang / (2.0 * kPi) * kBins));
      bin = ((bin % kBins) + kBins) % kBins;
      hist[bin] += w * mag;
    }
  }

  // One (1,4,6,4,1)/16 circular smoothing pass.
  std::array<double, kBins> smooth{};
  for (int i = 0; i < kBins; ++i) {
    const auto at = [&](int j) { return hist[((j % kBins) + kBins) % kBins]; };
    smooth[i] = (at(i - 2) + at(i + 2)) * (1.0 / 16.0) +
                (at(i - 1) + at(i + 1)) * (4.0 / 16.0) + at(i) * (6.0 / 16.0);
  }

  double max_v = 0.0;
  for (double v : smooth) max_v = std::max(max_v, v);
  std::vector<float> peaks;
  if (max_v <= 0.0) return peaks;
  const double floor_v = 0.8 * max_v;
  for (int i = 0; i < kBins; ++i) {
    const double l = smooth[(i + kBins - 1) % kBins];
    const double r = smooth[(i + 1) % kBins];
    const double c = smooth[i];
    if (c > l && c > r && c >= floor_v) {
      double bin = i + 0.5 * (l - r) / (l - 2.0 * c + r);
      if (bin < 0.0) bin += kBins;
      if (bin >= kBins) bin -= kBins;
      peaks.push_back(wrap_angle(
          static_cast<float>(bin * (2.0 * kPi / kBins))));
    }
  }
  return peaks;
}

}  // namespace detail

inline std::vector<Keypoint> detect_sift_keypoints(const GaussianPyramid& pyr) {
  const SiftConfig& cfg = pyr.config();
  const int s = cfg.octave_layers;
  const int border = cfg.border;
  const double prefilter = 0.5 * cfg.contrast_threshold / s;
  std::vector<Keypoint> out;

  for (int o = 0; o < pyr.octaves(); ++o) {
    const double px_scale = pyr.pixel_scale(o);
    for (int layer = 1; layer <= s; ++layer) {
      const FloatImage& prev = pyr.dog(o, layer - 1);
      const FloatImage& cur = pyr.dog(o, layer);
      const FloatImage& next = pyr.dog(o, layer + 1);
      const int w = cur.width;
      const int h = cur.height;
      for (int y = border; y < h - border; ++y) {
        for (int x = border; x < w - border; ++x) {
          const float v = cur.at(x, y);
          if (std::fabs(v) <= prefilter) continue;

          bool is_max = v > 0.0f;
          bool is_min = v < 0.0f;
          for (int dy = -1; dy <= 1 && (is_max || is_min); ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const float a = prev.at(x + dx, y + dy);
              const float b = cur.at(x + dx, y + dy);
              const float c = next.at(x + dx, y + dy);
              if (is_max &&
                  (v < a || v < c || (v < b && !(dx == 0 && dy == 0)))) {
                is_max = false;
              }
              if (is_min &&
                  (v > a || v > c || (v > b && !(dx == 0 && dy == 0)))) {
                is_min = false;
              }
            }
          }
          if (!is_max && !is_min) continue;

          // Sub-pixel refinement: Newton step on the 3D quadratic fit,
          // re-centering on the nearest sample up to 5 times.
          int xi = x, yi = y, li = layer;
          double dx_off = 0.0, dy_off = 0.0, ds_off = 0.0;
          double gx = 0.0, gy = 0.0, gs = 0.0;
          bool converged = false;
          for (int iter = 0; iter < 5; ++iter) {
            const FloatImage& d0 = pyr.dog(o, li - 1);
            const FloatImage& d1 = pyr.dog(o, li);
            const FloatImage& d2 = pyr.dog(o, li + 1);
            gx = 0.5 * (d1.at(xi + 1, yi) - d1.at(xi - 1, yi));
            gy = 0.5 * (d1.at(xi, yi + 1) - d1.at(xi, yi - 1));
            gs = 0.5 * (d2.at(xi, yi) - d0.at(xi, yi));
            const double c0 = d1.at(xi, yi);
            const double hxx = d1.at(xi + 1, yi) + d1.at(xi - 1, yi) - 2 * c0;
            const double hyy = d1.at(xi, yi + 1) + d1.at(xi, yi - 1) - 2 * c0;
            const double hss = d2.at(xi, yi) + d0.at(xi, yi) - 2 * c0;
            const double hxy = 0.25 * (d1.at(xi + 1, yi + 1) -
                                       d1.at(xi - 1, yi + 1) -
                                       d1.at(xi + 1, yi - 1) +
                                       d1.at(xi - 1, yi - 1));
            const double hxs = 0.25 * (d2.at(xi + 1, yi) - d2.at(xi - 1, yi) -
                                       d0.at(xi + 1, yi) + d0.at(xi - 1, yi));
            const double hys = 0.25 * (d2.at(xi, yi + 1) - d2.at(xi, yi - 1) -
                                       d0.at(xi, yi + 1) + d0.at(xi, yi - 1));
            // Solve H * delta = -g by Cramer's rule.
            const double det = hxx * (hyy * hss - hys * hys) -
                               hxy * (hxy * hss - hys * hxs) +
                               hxs * (hxy * hys - hyy * hxs);
            if (std::fabs(det) < 1e-30) break;
            const double inv = 1.0 / det;
            dx_off = -inv * (gx * (hyy * hss - hys * hys) -
                             gy * (hxy * hss - hxs * hys) +
                             gs * (hxy * hys - hxs * hyy));
            dy_off = -inv * (-gx * (hxy * hss - hys * hxs) +
                             gy * (hxx * hss - hxs * hxs) -
                             gs * (hxx * hys - hxy * hxs));
            ds_off = -inv * (gx * (hxy * hys - hyy * hxs) -
                             gy * (hxx * hys - hxy * hxs) +
                             gs * (hxx * hyy - hxy * hxy));
            if (std::fabs(dx_off) < 0.5 && std::fabs(dy_off) < 0.5 &&
                std::fabs(ds_off) < 0.5) {
              converged = true;
              break;
            }
            xi += static_cast<int>(std::lround(dx_off));
            yi += static_cast<int>(std::lround(dy_off));
            li += static_cast<int>(std::lround(ds_off));
            if (li < 1 || li > s || xi < border || xi >= w - border ||
                yi < border || yi >= h - border) {
              break;
            }
          }
          if (!converged) continue;

          const FloatImage& d1 = pyr.dog(o, li);
          const double contrast =
              d1.at(xi, yi) + 0.5 * (gx * dx_off + gy * dy_off + gs * ds_off);
          if (std::fabs(contrast) < cfg.contrast_threshold / s) continue;

          // Edge response on the 2x2 spatial Hessian.
          const double c0 = d1.at(xi, yi);
          const double dxx = d1.at(xi + 1, yi) + d1.at(xi - 1, yi) - 2 * c0;
          const double dyy = d1.at(xi, yi + 1) + d1.at(xi, yi - 1) - 2 * c0;
          const double dxy = 0.25 * (d1.at(xi + 1, yi + 1) -
                                     d1.at(xi - 1, yi + 1) -
                                     d1.at(xi + 1, yi - 1) +
                                     d1.at(xi - 1, yi - 1));
          const double tr = dxx + dyy;
          const double det2 = dxx * dyy - dxy * dxy;
          const double e = cfg.edge_threshold;
          if (det2 <= 0.0 || tr * tr * e >= (e + 1.0) * (e + 1.0) * det2) {
            continue;
          }

          const double sigma_octave =
              cfg.sigma * std::pow(2.0, (li + ds_off) / s);
          Keypoint base;
          base.x = static_cast<float>((xi + dx_off) * px_scale);
          base.y = static_cast<float>((yi + dy_off) * px_scale);
          base.scale = static_cast<float>(sigma_octave * px_scale);
          const std::vector<float> peaks =
              detail::orientation_peaks(pyr.gauss(o, li), xi, yi,
                                        sigma_octave);
          for (float angle : peaks) {
            Keypoint kp = base;
            kp.orientation = angle;
            out.push_back(kp);
          }
        }
      }
    }
  }
  return out;
}

inline std::vector<Keypoint> detect_sift_keypoints(const GrayImage& img,
                                                   const SiftConfig& cfg = {}) {
  if (img.width < 16 || img.height < 16) {
    throw ImageTooSmallError("detect_sift_keypoints: image below 16x16");
  }
  GaussianPyramid pyr(img, cfg);
  return detect_sift_keypoints(pyr);
}

namespace detail {

// 4x4x8 gradient histogram descriptor, trilinearly binned and Gaussian
// weighted, following Lowe's layout. The final normalization iterates
// normalize -> clamp(0.2) until both the unit norm and the component bound
// hold; descriptors that cannot satisfy both (fewer than 25 active bins)
// come back as all zeros.
inline std::array<float, 128> describe_keypoint(const GaussianPyramid& pyr,
                                                const Keypoint& kp) {
  constexpr int kD = 4;
  constexpr int kBins = 8;
  const SiftConfig& cfg = pyr.config();
  const int s = cfg.octave_layers;

  // Octave whose base scale is nearest below the keypoint scale.
  const double sigma_rel =
      static_cast<double>(kp.scale) / (cfg.upsample_first ? 0.5 : 1.0);
  int o = static_cast<int>(
      std::floor(std::log2(std::max(sigma_rel / cfg.sigma, 1.0))));
  o = std::clamp(o, 0, pyr.octaves() - 1);
  const double px_scale = pyr.pixel_scale(o);
  const double sigma_octave = sigma_rel / static_cast<double>(1 << o);
  int layer = static_cast<int>(
      std::lround(s * std::log2(std::max(sigma_octave / cfg.sigma, 1.0))));
  layer = std::clamp(layer, 0, s + 2);
  const FloatImage& img = pyr.gauss(o, layer);

  const double xo = kp.x / px_scale;
  const double yo = kp.y / px_scale;
  const int cx = static_cast<int>(std::lround(xo));
  const int cy = static_cast<int>(std::lround(yo));

  const double cos_t = std::cos(static_cast<double>(kp.orientation));
  const double sin_t = std::sin(static_cast<double>(kp.orientation));
  const double hist_width = 3.0 * sigma_octave;
  int radius = static_cast<int>(std::lround(
      hist_width * std::sqrt(2.0) * (kD + 1) * 0.5 + 0.5));
  radius = std::min(radius, static_cast<int>(std::sqrt(
                                static_cast<double>(img.width) * img.width +
                                static_cast<double>(img.height) * img.height)));
  const double bins_per_rad = kBins / (2.0 * kPi);
  const double exp_scale = -1.0 / (kD * kD * 0.5);

  // Padded histogram: one guard cell on each spatial side, wrap cell on the
  // orientation axis.
  double hist[(kD + 2) * (kD + 2) * (kBins + 2)] = {0.0};
  const auto hidx = [&](int r, int c, int b) {
    return (r * (kD + 2) + c) * (kBins + 2) + b;
  };

  for (int di = -radius; di <= radius; ++di) {
    const int y = cy + di;
    if (y < 1 || y >= img.height - 1) continue;
    for (int dj = -radius; dj <= radius; ++dj) {
      const int x = cx + dj;
      if (x < 1 || x >= img.width - 1) continue;
      // Offset in the keypoint frame (rotate by -orientation), bin units.
      const double u = (dj * cos_t + di * sin_t) / hist_width;
      const double v = (-dj * sin_t + di * cos_t) / hist_width;
      const double cbin = u + kD / 2.0 - 0.5;
      const double rbin = v + kD / 2.0 - 0.5;
      if (rbin <= -1.0 || rbin >= kD || cbin <= -1.0 || cbin >= kD) continue;

      const float gx = img.at(x + 1, y) - img.at(x - 1, y);
      const float gy = img.at(x, y + 1) - img.at(x, y - 1);
      const double mag = std::sqrt(static_cast<double>(gx) * gx +
                                   static_cast<double>(gy) * gy);
      double theta = std::atan2(static_cast<double>(gy),
                                static_cast<double>(gx)) -
                     static_cast<double>(kp.orientation);
      double obin = theta * bins_per_rad;
      while (obin < 0.0) obin += kBins;
      while (obin >= kBins) obin -= kBins;

      const double weight = std::exp((u * u + v * v) * exp_scale);
      const double val = mag * weight;

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      const int o0 = static_cast<int>(std::floor(obin));
      const double fr = rbin - r0;
      const double fc = cbin - c0;
      const double fo = obin - o0;

      for (int ir = 0; ir <= 1; ++ir) {
        const double wr = val * (ir == 0 ? 1.0 - fr : fr);
        for (int ic = 0; ic <= 1; ++ic) {
          const double wc = wr * (ic == 0 ? 1.0 - fc : fc);
          for (int io = 0; io <= 1; ++io) {
            const double wo = wc * (io == 0 ? 1.0 - fo : fo);
            hist[hidx(r0 + ir + 1, c0 + ic + 1, o0 + io)] += wo;
          }
        }
      }
    }
  }

  std::array<float, 128> vec{};
  // Fold the orientation wrap cells and drop the spatial guard cells.
  double acc[128];
  for (int r = 0; r < kD; ++r) {
    for (int c = 0; c < kD; ++c) {
      double* cell = hist + hidx(r + 1, c + 1, 0);
      cell[0] += cell[kBins];
      cell[1] += cell[kBins + 1];
      for (int b = 0; b < kBins; ++b) {
        acc[(r * kD + c) * kBins + b] = cell[b];
      }
    }
  }

  for (int iter = 0; iter < 64; ++iter) {
    double norm2 = 0.0;
    for (double a : acc) norm2 += a * a;
    if (norm2 < 1e-24) return vec;  // all zeros
    const double inv = 1.0 / std::sqrt(norm2);
    double max_v = 0.0;
    for (double& a : acc) {
      a *= inv;
      max_v = std::max(max_v, a);
    }
    if (max_v <= 0.2 + 1e-9) {
      for (int i = 0; i < 128; ++i) vec[i] = static_cast<float>(acc[i]);
      return vec;
    }
    for (double& a : acc) a = std::min(a, 0.2);
  }
  return vec;  // could not satisfy both bounds: all zeros
}

}  // namespace detail

}  // namespace typeforge

#endif  // TYPEFORGE_SIFT_HPP_
