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

#ifndef TYPEFORGE_FEATURES_HPP_
#define TYPEFORGE_FEATURES_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "typeforge/binio.hpp"
#include "typeforge/edges.hpp"
#include "typeforge/errors.hpp"
#include "typeforge/image.hpp"
#include "typeforge/rng.hpp"
#include "typeforge/sift.hpp"

namespace typeforge {

struct DescriptorSet {
  static constexpr int kDim = 128;

  std::string image_id;
  std::vector<Keypoint> keypoints;
  std::vector<float> descriptors;  // kDim values per keypoint, row-major

  std::size_t size() const { return keypoints.size(); }
  bool empty() const { return keypoints.empty(); }

  const float* descriptor(std::size_t i) const {
    return descriptors.data() + i * kDim;
  }

  void validate() const {
    if (descriptors.size() != keypoints.size() * kDim) {
      throw DimensionMismatchError(
          "DescriptorSet: descriptor buffer does not match keypoint count");
    }
  }
};

inline DescriptorSet compute_sift_descriptors(const GaussianPyramid& pyr,
                                              const std::vector<Keypoint>& kps,
                                              const std::string& image_id) {
  DescriptorSet out;
  out.image_id = image_id;
  out.keypoints = kps;
  out.descriptors.resize(kps.size() * DescriptorSet::kDim);
  for (std::size_t i = 0; i < kps.size(); ++i) {
    const std::array<float, 128> d = detail::describe_keypoint(pyr, kps[i]);
    std::copy(d.begin(), d.end(),
              out.descriptors.begin() + i * DescriptorSet::kDim);
  }
  return out;
}

inline DescriptorSet compute_sift_descriptors(const GrayImage& img,
                                              const std::vector<Keypoint>& kps,
                                              const SiftConfig& cfg = {},
                                              const std::string& image_id = "") {
  GaussianPyramid pyr(img, cfg);
  return compute_sift_descriptors(pyr, kps, image_id);
}

// ---------------------------------------------------------------------------
// Contour sampling
// ---------------------------------------------------------------------------

struct ContourConfig {
  int stride = 3;                     // keep every stride-th edge pixel
  std::vector<double> scales = {2.0, 4.0, 8.0};
  CannyConfig canny;
};

// Edge pixels from auto-thresholded Canny, subsampled in row-major order,
// instantiated at each configured scale with the local gradient angle as
// orientation. A blank page has no edges: the ConstantImage condition from
// auto_hysteresis maps to an empty keypoint list here.
inline std::vector<Keypoint> contour_keypoints(const GrayImage& img,
                                               const ContourConfig& cfg = {}) {
  if (img.empty()) throw ValidationError("contour_keypoints: empty image");
  if (cfg.stride < 1) throw ValidationError("contour_keypoints: stride < 1");
  if (cfg.scales.empty()) {
    throw ValidationError("contour_keypoints: no scales");
  }
  for (double s : cfg.scales) {
    if (s <= 0.0) throw ValidationError("contour_keypoints: scale <= 0");
  }

  HysteresisThresholds thr;
  try {
    thr = auto_hysteresis(img, cfg.canny);
  } catch (const ConstantImageError&) {
    return {};
  }
  const BinaryImage edges = canny(img, thr.low, thr.high, cfg.canny);

  FloatImage gx, gy;
  detail::smoothed_gradients(img, cfg.canny.sigma, gx, gy);

  std::vector<Keypoint> out;
  std::size_t edge_index = 0;
  for (int y = 0; y < edges.height; ++y) {
    for (int x = 0; x < edges.width; ++x) {
      if (!edges.at(x, y)) continue;
      const bool keep = edge_index % static_cast<std::size_t>(cfg.stride) == 0;
      ++edge_index;
      if (!keep) continue;
      const float angle = detail::wrap_angle(
          std::atan2(gy.at(x, y), gx.at(x, y)));
      for (double s : cfg.scales) {
        Keypoint kp;
        kp.x = static_cast<float>(x);
        kp.y = static_cast<float>(y);
        kp.scale = static_cast<float>(s);
        kp.orientation = angle;
        out.push_back(kp);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extraction entry point
// ---------------------------------------------------------------------------

enum class SamplingMode { kKeypoint, kContour };

struct SamplingConfig {
  SamplingMode mode = SamplingMode::kKeypoint;
  SiftConfig sift;
  ContourConfig contour;
  int max_descriptors = 20000;  // 0 disables the cap
  std::uint64_t seed = 0;
};

// Detects (or samples) keypoints, describes them, and applies the
// per-image descriptor cap by seeded uniform subsampling that preserves the
// original order.
inline DescriptorSet extract_descriptor_set(const GrayImage& img,
                                            const std::string& image_id,
                                            const SamplingConfig& cfg) {
  std::vector<Keypoint> kps;
  GaussianPyramid pyr(img, cfg.sift);
  if (cfg.mode == SamplingMode::kKeypoint) {
    if (img.width < 16 || img.height < 16) {
      throw ImageTooSmallError("extract_descriptor_set: image below 16x16");
    }
    kps = detect_sift_keypoints(pyr);
  } else {
    kps = contour_keypoints(img, cfg.contour);
  }

  if (cfg.max_descriptors > 0 &&
      kps.size() > static_cast<std::size_t>(cfg.max_descriptors)) {
    Rng rng(derive_seed(cfg.seed, "subsample:" + image_id));
    std::vector<std::size_t> idx(kps.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    idx.resize(static_cast<std::size_t>(cfg.max_descriptors));
    std::sort(idx.begin(), idx.end());
    std::vector<Keypoint> kept;
    kept.reserve(idx.size());
    for (std::size_t i : idx) kept.push_back(kps[i]);
    kps = std::move(kept);
  }

  return compute_sift_descriptors(pyr, kps, image_id);
}

// ---------------------------------------------------------------------------
// Descriptor file format (magic "TFDS")
// ---------------------------------------------------------------------------
//
// All integers little-endian:
//   magic           4 bytes "TFDS"
//   version         u16 (currently 1)
//   image id        u32 length + UTF-8 bytes
//   count           u32
//   per record      x, y, scale, orientation as f32, then 128 f32

inline constexpr std::uint16_t kDescriptorFileVersion = 1;

inline void save_descriptor_set(const std::filesystem::path& path,
                                const DescriptorSet& ds) {
  ds.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write descriptor file: " + path.string());
  out.write("TFDS", 4);
  write_u16le(out, kDescriptorFileVersion);
  write_string32(out, ds.image_id);
  write_u32le(out, static_cast<std::uint32_t>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Keypoint& kp = ds.keypoints[i];
    write_f32le(out, kp.x);
    write_f32le(out, kp.y);
    write_f32le(out, kp.scale);
    write_f32le(out, kp.orientation);
    const float* d = ds.descriptor(i);
    for (int j = 0; j < DescriptorSet::kDim; ++j) write_f32le(out, d[j]);
  }
  if (!out) throw IoError("short write on descriptor file: " + path.string());
}

inline DescriptorSet load_descriptor_set(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingFileError("missing descriptor file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open descriptor file: " + path.string());
  char magic[4];
  read_exact(in, magic, 4, "TFDS magic");
  if (std::string(magic, 4) != "TFDS") {
    throw IoError("bad magic in descriptor file: " + path.string());
  }
  const std::uint16_t version = read_u16le(in, "TFDS version");
  if (version != kDescriptorFileVersion) {
    throw IoError("unsupported TFDS version in " + path.string());
  }
  DescriptorSet ds;
  ds.image_id = read_string32(in, "TFDS image id");
  const std::uint32_t count = read_u32le(in, "TFDS count");
  ds.keypoints.resize(count);
  ds.descriptors.resize(static_cast<std::size_t>(count) *
                        DescriptorSet::kDim);
  for (std::uint32_t i = 0; i < count; ++i) {
    Keypoint& kp = ds.keypoints[i];
    kp.x = read_f32le(in, "TFDS keypoint");
    kp.y = read_f32le(in, "TFDS keypoint");
    kp.scale = read_f32le(in, "TFDS keypoint");
    kp.orientation = read_f32le(in, "TFDS keypoint");
    for (int j = 0; j < DescriptorSet::kDim; ++j) {
      ds.descriptors[static_cast<std::size_t>(i) * DescriptorSet::kDim + j] =
          read_f32le(in, "TFDS descriptor");
    }
  }
  return ds;
}

}  // namespace typeforge

#endif  // TYPEFORGE_FEATURES_HPP_
