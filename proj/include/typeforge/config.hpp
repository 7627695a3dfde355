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

#ifndef TYPEFORGE_CONFIG_HPP_
#define TYPEFORGE_CONFIG_HPP_

#include <cstdint>
#include <cstdio>
#include <string>

#include "typeforge/clseval.hpp"
#include "typeforge/encoder.hpp"
#include "typeforge/esvm.hpp"
#include "typeforge/features.hpp"
#include "typeforge/retrieval.hpp"
#include "typeforge/rng.hpp"

namespace typeforge {

// Everything one run needs; the CLI and the config file both fill this.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  Protocol protocol = Protocol::kOneVsAll;
  bool esvm_enabled = false;
  SamplingConfig sampling;
  EncoderConfig encoder;
  EsvmConfig esvm;
  std::size_t patches_per_type = 5000;
  int patch_size = 300;
  bool augment_enabled = true;
  AugmentPolicy augment;
};

namespace detail {

inline std::string fmt_f64(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_u64_hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

// Canonical per-stage config strings; hashing them chains each stage to
// everything upstream, so artifacts remember the configuration that
// produced them.
inline std::string extract_config_string(const RunConfig& cfg) {
  const SamplingConfig& s = cfg.sampling;
  std::string out = "extract|sampling=";
  out += s.mode == SamplingMode::kKeypoint ? "keypoint" : "contour";
  out += "|max_descriptors=" + std::to_string(s.max_descriptors);
  out += "|octave_layers=" + std::to_string(s.sift.octave_layers);
  out += "|contrast=" + detail::fmt_f64(s.sift.contrast_threshold);
  out += "|edge=" + detail::fmt_f64(s.sift.edge_threshold);
  out += "|sigma=" + detail::fmt_f64(s.sift.sigma);
  out += "|upsample=" + std::to_string(s.sift.upsample_first ? 1 : 0);
  out += "|border=" + std::to_string(s.sift.border);
  out += "|stride=" + std::to_string(s.contour.stride);
  out += "|scales=";
  for (std::size_t i = 0; i < s.contour.scales.size(); ++i) {
    if (i) out += ",";
    out += detail::fmt_f64(s.contour.scales[i]);
  }
  out += "|canny_sigma=" + detail::fmt_f64(s.contour.canny.sigma);
  out += "|seed=" + std::to_string(cfg.seed);
  return out;
}

inline std::uint64_t extract_config_hash(const RunConfig& cfg) {
  return fnv1a64(extract_config_string(cfg));
}

inline std::string train_config_string(const RunConfig& cfg) {
  const EncoderConfig& e = cfg.encoder;
  std::string out = "train";
  out += "|codebook_size=" + std::to_string(e.codebook_size);
  out += "|num_codebooks=" + std::to_string(e.num_codebooks);
  out += "|local_dim=" + std::to_string(e.local_dim);
  out += "|target_dim=" + std::to_string(e.target_dim);
  out += "|dirichlet_eps=" + detail::fmt_f64(e.dirichlet_eps);
  out += "|power=" + detail::fmt_f64(e.power);
  out += "|whitening_eps_rel=" + detail::fmt_f64(e.whitening_eps_rel);
  out += "|kmeans_iters=" + std::to_string(e.kmeans_iters);
  out += "|max_train_descriptors=" + std::to_string(e.max_train_descriptors);
  out += "|gmp_lambda=" + detail::fmt_f64(e.gmp.lambda);
  out += "|gmp_tolerance=" + detail::fmt_f64(e.gmp.tolerance);
  out += "|seed=" + std::to_string(cfg.seed);
  out += "|prev=" + detail::fmt_u64_hex(extract_config_hash(cfg));
  return out;
}

inline std::uint64_t train_config_hash(const RunConfig& cfg) {
  return fnv1a64(train_config_string(cfg));
}

inline std::string encode_config_string(const RunConfig& cfg) {
  return "encode|prev=" + detail::fmt_u64_hex(train_config_hash(cfg));
}

inline std::uint64_t encode_config_hash(const RunConfig& cfg) {
  return fnv1a64(encode_config_string(cfg));
}

inline std::string esvm_config_string(const RunConfig& cfg) {
  const EsvmConfig& e = cfg.esvm;
  std::string out = "esvm";
  out += "|c_pos=" + detail::fmt_f64(e.c_pos);
  out += "|c_neg=" + detail::fmt_f64(e.c_neg);
  out += "|tolerance=" + detail::fmt_f64(e.tolerance);
  out += "|max_passes=" + std::to_string(e.max_passes);
  out += "|prev=" + detail::fmt_u64_hex(encode_config_hash(cfg));
  return out;
}

inline std::uint64_t esvm_config_hash(const RunConfig& cfg) {
  return fnv1a64(esvm_config_string(cfg));
}

}  // namespace typeforge

#endif  // TYPEFORGE_CONFIG_HPP_
