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

#ifndef TYPEFORGE_CLSEVAL_HPP_
#define TYPEFORGE_CLSEVAL_HPP_

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "typeforge/binarize.hpp"
#include "typeforge/errors.hpp"
#include "typeforge/image.hpp"
#include "typeforge/image_io.hpp"
#include "typeforge/jitter.hpp"
#include "typeforge/rng.hpp"
#include "typeforge/transform.hpp"

namespace typeforge {

// ---------------------------------------------------------------------------
// Patch sampling
// ---------------------------------------------------------------------------

// Uniformly random top-left corners; the patch must fit inside the image.
inline std::vector<RgbImage> sample_patches(const RgbImage& img,
                                            std::size_t count,
                                            int patch_w, int patch_h,
                                            Rng& rng) {
  if (patch_w < 1 || patch_h < 1) {
    throw ValidationError("sample_patches: non-positive patch size");
  }
  if (img.width < patch_w || img.height < patch_h) {
    throw ImageTooSmallForPatchError(
        "sample_patches: image " + std::to_string(img.width) + "x" +
        std::to_string(img.height) + " smaller than patch " +
        std::to_string(patch_w) + "x" + std::to_string(patch_h));
  }
  const std::uint64_t max_x = static_cast<std::uint64_t>(img.width - patch_w);
  const std::uint64_t max_y =
      static_cast<std::uint64_t>(img.height - patch_h);
  std::vector<RgbImage> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int x0 = static_cast<int>(rng.below(max_x + 1));
    const int y0 = static_cast<int>(rng.below(max_y + 1));
    RgbImage patch(patch_w, patch_h);
    for (int y = 0; y < patch_h; ++y) {
      for (int x = 0; x < patch_w; ++x) {
        const std::uint8_t* src = img.px(x0 + x, y0 + y);
        std::uint8_t* dst = patch.px(x, y);
        dst[0] = src[0];
        dst[1] = src[1];
        dst[2] = src[2];
      }
    }
    out.push_back(std::move(patch));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

enum class BinarizeChoice { kNone, kOtsu, kSauvola };

struct AugmentPolicy {
  double rotation_deg = 15.0;   // drawn from the open interval (-r, r)
  double shear_deg = 3.0;       // drawn from the open interval (-s, s)
  double scale_low = 0.9;       // scale from the open interval (low, high)
  double scale_high = 1.1;
  JitterFactors jitter;         // brightness/contrast/saturation/hue
  int jpeg_quality_min = 2;     // quality from [min, max)
  int jpeg_quality_max = 100;   // quality >= 100 disables the jpeg pass
  double otsu_probability = 0.05;
  double sauvola_probability = 0.025;
  int sauvola_window = 31;
  double sauvola_k = 0.2;
  int crop_w = 224;
  int crop_h = 224;
};

struct AugmentParams {
  double rotation_deg = 0.0;
  double shear_deg = 0.0;
  double scale = 1.0;
  JitterParams jitter;
  BinarizeChoice binarize = BinarizeChoice::kNone;
  int jpeg_quality = 100;  // >= 100 skips compression
};

inline void validate_augment_policy(const AugmentPolicy& p) {
  if (p.rotation_deg < 0.0 || p.shear_deg < 0.0) {
    throw ValidationError("augment: negative rotation or shear range");
  }
  if (!(p.scale_low > 0.0) || !(p.scale_high > p.scale_low)) {
    throw ValidationError("augment: bad scale range");
  }
  if (p.jpeg_quality_min < 1 || p.jpeg_quality_max <= p.jpeg_quality_min) {
    throw ValidationError("augment: bad jpeg quality range");
  }
  if (p.otsu_probability < 0.0 || p.sauvola_probability < 0.0 ||
      p.otsu_probability + p.sauvola_probability > 1.0) {
    throw ValidationError("augment: bad binarization probabilities");
  }
  if (p.crop_w < 1 || p.crop_h < 1) {
    throw ValidationError("augment: bad crop size");
  }
}

// One independent draw per field. The two binarization modes are mutually
// exclusive: a single uniform draw is partitioned into [0, p_otsu) for
// Otsu and [p_otsu, p_otsu + p_sauvola) for Sauvola.
inline AugmentParams sample_augment_params(const AugmentPolicy& policy,
                                           Rng& rng) {
  validate_augment_policy(policy);
  AugmentParams params;
  params.rotation_deg =
      policy.rotation_deg > 0.0
          ? rng.uniform_open(-policy.rotation_deg, policy.rotation_deg)
          : 0.0;
  params.shear_deg =
      policy.shear_deg > 0.0
          ? rng.uniform_open(-policy.shear_deg, policy.shear_deg)
          : 0.0;
  params.scale = rng.uniform_open(policy.scale_low, policy.scale_high);
  params.jitter = sample_jitter_params(policy.jitter, rng);
  const double u = rng.uniform();
  if (u < policy.otsu_probability) {
    params.binarize = BinarizeChoice::kOtsu;
  } else if (u < policy.otsu_probability + policy.sauvola_probability) {
    params.binarize = BinarizeChoice::kSauvola;
  }
  params.jpeg_quality =
      policy.jpeg_quality_min +
      static_cast<int>(rng.below(static_cast<std::uint64_t>(
          policy.jpeg_quality_max - policy.jpeg_quality_min)));
  return params;
}

namespace detail {

// Binary mask to a black-on-white rgb image.
inline RgbImage mask_to_rgb(const BinaryImage& mask) {
  RgbImage out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const std::uint8_t v = mask.at(x, y) ? 0 : 255;
      std::uint8_t* p = out.px(x, y);
      p[0] = v;
      p[1] = v;
      p[2] = v;
    }
  }
  return out;
}

}  // namespace detail

// Affine -> color jitter -> optional binarization -> optional jpeg ->
// center crop. The crop comes last so transform borders fall away.
inline RgbImage apply_augment(const RgbImage& img,
                              const AugmentParams& params,
                              const AugmentPolicy& policy) {
  validate_augment_policy(policy);
  RgbImage work = affine_transform(img, params.rotation_deg,
                                   params.shear_deg, params.scale, 255);
  apply_color_jitter(work, params.jitter);
  if (params.binarize == BinarizeChoice::kOtsu) {
    const GrayImage gray = to_grayscale(work);
    OtsuResult otsu = otsu_threshold(gray);
    if (!otsu.foreground_is_dark) {
      // Foreground renders black either way.
      for (auto& b : otsu.mask.data) b = b ? 0 : 1;
    }
    work = detail::mask_to_rgb(otsu.mask);
  } else if (params.binarize == BinarizeChoice::kSauvola) {
    const GrayImage gray = to_grayscale(work);
    work = detail::mask_to_rgb(
        sauvola_binarize(gray, policy.sauvola_window, policy.sauvola_k));
  }
  if (params.jpeg_quality < 100) {
    work = jpeg_roundtrip(work, params.jpeg_quality);
  }
  return center_crop(work, policy.crop_w, policy.crop_h);
}

// ---------------------------------------------------------------------------
// Confusion matrix scoring
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
  std::vector<std::string> labels;            // sorted unique labels
  std::vector<std::uint64_t> counts;          // row: true, col: predicted

  std::size_t k() const { return labels.size(); }
  std::uint64_t& at(std::size_t t, std::size_t p) {
    return counts[t * k() + p];
  }
  std::uint64_t at(std::size_t t, std::size_t p) const {
    return counts[t * k() + p];
  }
};

struct ClassificationScore {
  double overall_percent = 0.0;  // trace / total
  double average_percent = 0.0;  // mean of per-class accuracies
  std::uint64_t total = 0;
};

struct Prediction {
  std::string image_id;
  std::string true_label;
  std::string predicted_label;
};

inline ConfusionMatrix build_confusion(const std::vector<Prediction>& preds) {
  if (preds.empty()) {
    throw ValidationError("build_confusion: no predictions");
  }
  std::map<std::string, std::size_t> index;
  for (const auto& p : preds) {
    index.emplace(p.true_label, 0);
    index.emplace(p.predicted_label, 0);
  }
  ConfusionMatrix cm;
  for (auto& [label, idx] : index) {
    idx = cm.labels.size();
    cm.labels.push_back(label);
  }
  cm.counts.assign(cm.k() * cm.k(), 0);
  for (const auto& p : preds) {
    ++cm.at(index[p.true_label], index[p.predicted_label]);
  }
  return cm;
}

inline ClassificationScore score_confusion(const ConfusionMatrix& cm) {
  if (cm.k() == 0) throw ValidationError("score_confusion: empty matrix");
  ClassificationScore score;
  std::uint64_t trace = 0;
  double class_acc_sum = 0.0;
  std::size_t classes_with_samples = 0;
  for (std::size_t t = 0; t < cm.k(); ++t) {
    std::uint64_t row_total = 0;
    for (std::size_t p = 0; p < cm.k(); ++p) row_total += cm.at(t, p);
    score.total += row_total;
    trace += cm.at(t, t);
    if (row_total > 0) {
      ++classes_with_samples;
      class_acc_sum += static_cast<double>(cm.at(t, t)) /
                       static_cast<double>(row_total);
    }
  }
  if (score.total == 0) {
    throw ValidationError("score_confusion: no samples");
  }
  score.overall_percent =
      100.0 * static_cast<double>(trace) / static_cast<double>(score.total);
  score.average_percent =
      100.0 * class_acc_sum / static_cast<double>(classes_with_samples);
  return score;
}

inline constexpr const char* kPredictionsHeader =
    "image_id,true_label,predicted_label";

inline std::vector<Prediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("predictions: empty file: " + path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPredictionsHeader) {
    throw ValidationError("predictions: unexpected header: " + line);
  }
  std::vector<Prediction> preds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
        fields[2].empty()) {
      throw ValidationError("predictions: bad line " +
                            std::to_string(line_no));
    }
    preds.push_back({fields[0], fields[1], fields[2]});
  }
  if (preds.empty()) {
    throw ValidationError("predictions: no rows: " + path);
  }
  return preds;
}

inline void save_predictions(const std::vector<Prediction>& preds,
                             const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << kPredictionsHeader << "\n";
  for (const auto& p : preds) {
    out << p.image_id << ',' << p.true_label << ',' << p.predicted_label
        << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace typeforge

#endif  // TYPEFORGE_CLSEVAL_HPP_
