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

#ifndef TYPEFORGE_PIPELINE_HPP_
#define TYPEFORGE_PIPELINE_HPP_

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "typeforge/clseval.hpp"
#include "typeforge/config.hpp"
#include "typeforge/encoder.hpp"
#include "typeforge/errors.hpp"
#include "typeforge/esvm.hpp"
#include "typeforge/features.hpp"
#include "typeforge/image_io.hpp"
#include "typeforge/manifest.hpp"
#include "typeforge/retrieval.hpp"

namespace typeforge {

// Artifact layout inside one workspace directory. Every stage reads the
// previous stage's artifact and verifies the config hash embedded in it.
struct Workspace {
  std::filesystem::path root;

  explicit Workspace(std::string dir) : root(std::move(dir)) {}

  std::filesystem::path manifest_path() const {
    return root / "manifest.csv";
  }
  std::filesystem::path descriptors_dir() const {
    return root / "descriptors";
  }
  std::filesystem::path descriptor_path(const std::string& image_id) const {
    return descriptors_dir() / (image_id + ".tfds");
  }
  std::filesystem::path extract_stage_path() const {
    return descriptors_dir() / "stage.json";
  }
  std::filesystem::path model_path() const { return root / "model.tfem"; }
  std::filesystem::path encodings_path() const {
    return root / "encodings.tfge";
  }
  std::filesystem::path esvm_encodings_path() const {
    return root / "encodings_esvm.tfge";
  }
  std::filesystem::path metrics_path() const { return root / "metrics.json"; }
};

namespace detail {

inline void log_line(const std::string& msg) {
  std::fprintf(stderr, "%s\n", msg.c_str());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

inline std::size_t run_ingest(const Workspace& ws,
                              const std::string& input_root,
                              const std::set<std::string>& test_types) {
  const Manifest m = manifest_from_tree(input_root, test_types);
  if (m.rows.empty()) {
    throw ValidationError("ingest: no images found under " + input_root);
  }
  std::filesystem::create_directories(ws.root);
  save_manifest(m, ws.manifest_path().string());
  detail::log_line("ingest: " + std::to_string(m.rows.size()) +
                   " images -> " + ws.manifest_path().string());
  return m.rows.size();
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

inline std::size_t run_extract(const Workspace& ws, RunConfig cfg) {
  cfg.sampling.seed = cfg.seed;
  const Manifest manifest = load_manifest(ws.manifest_path().string());
  const std::uint64_t hash = extract_config_hash(cfg);
  const std::string hash_hex = detail::fmt_u64_hex(hash);

  // The sidecar pins the config that produced the descriptor files; a
  // different configuration must not silently mix artifacts.
  if (std::filesystem::exists(ws.extract_stage_path())) {
    std::ifstream in(ws.extract_stage_path());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception&) {
      throw StaleArtifactError("extract: unreadable stage sidecar " +
                               ws.extract_stage_path().string());
    }
    if (j.value("config_hash", "") != hash_hex) {
      throw StaleArtifactError(
          "extract: descriptors were produced with a different "
          "configuration; delete " +
          ws.descriptors_dir().string() + " to re-extract");
    }
  }

  std::filesystem::create_directories(ws.descriptors_dir());
  for (const auto& row : manifest.rows) {
    std::filesystem::create_directories(
        ws.descriptor_path(row.image_id).parent_path());
  }

  std::size_t produced = 0;
  std::vector<char> fresh(manifest.rows.size(), 0);
  parallel_for(manifest.rows.size(), cfg.threads, [&](std::size_t i) {
    const ManifestRow& row = manifest.rows[i];
    const std::filesystem::path out = ws.descriptor_path(row.image_id);
    if (std::filesystem::exists(out)) return;
    const GrayImage img = load_gray(row.path);
    const DescriptorSet ds =
        extract_descriptor_set(img, row.image_id, cfg.sampling);
    save_descriptor_set(out, ds);
    fresh[i] = 1;
  });
  for (char f : fresh) produced += static_cast<std::size_t>(f);

  nlohmann::json sidecar;
  sidecar["stage"] = "extract";
  sidecar["config_hash"] = hash_hex;
  sidecar["images"] = manifest.rows.size();
  std::ofstream out(ws.extract_stage_path(), std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + ws.extract_stage_path().string());
  }
  out << sidecar.dump(2) << "\n";
  detail::log_line("extract: " + std::to_string(produced) + " new, " +
                   std::to_string(manifest.rows.size() - produced) +
                   " existing");
  return produced;
}

namespace detail {

inline void check_extract_stage(const Workspace& ws, const RunConfig& cfg) {
  if (!std::filesystem::exists(ws.extract_stage_path())) {
    throw MissingFileError("missing " + ws.extract_stage_path().string() +
                           "; run extract first");
  }
  std::ifstream in(ws.extract_stage_path());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception&) {
    throw StaleArtifactError("unreadable stage sidecar " +
                             ws.extract_stage_path().string());
  }
  if (j.value("config_hash", "") != fmt_u64_hex(extract_config_hash(cfg))) {
    throw StaleArtifactError(
        "descriptors are stale for this configuration; re-run extract");
  }
}

inline DescriptorSet load_row_descriptors(const Workspace& ws,
                                          const ManifestRow& row) {
  const std::filesystem::path p = ws.descriptor_path(row.image_id);
  if (!std::filesystem::exists(p)) {
    throw MissingFileError("missing descriptor file " + p.string() +
                           "; re-run extract");
  }
  DescriptorSet ds = load_descriptor_set(p.string());
  if (ds.image_id != row.image_id) {
    throw ValidationError("descriptor file " + p.string() +
                          " belongs to " + ds.image_id);
  }
  return ds;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

inline void run_train(const Workspace& ws, RunConfig cfg) {
  cfg.sampling.seed = cfg.seed;
  cfg.encoder.seed = cfg.seed;
  detail::check_extract_stage(ws, cfg);
  const std::uint64_t expected = train_config_hash(cfg);

  if (std::filesystem::exists(ws.model_path())) {
    try {
      if (load_encoder_model(ws.model_path().string()).config_hash ==
          expected) {
        detail::log_line("train: model is up to date");
        return;
      }
    } catch (const Error&) {
      // Unreadable model: retrain over it.
    }
  }

  const Manifest manifest = load_manifest(ws.manifest_path().string());
  std::vector<DescriptorSet> sets;
  for (const auto& row : manifest.rows) {
    if (row.split != "train") continue;
    sets.push_back(detail::load_row_descriptors(ws, row));
  }
  if (sets.empty()) {
    throw ValidationError("train: manifest has no train rows");
  }
  EncoderModel model = fit_encoder(sets, cfg.encoder, cfg.threads);
  model.config_hash = expected;
  save_encoder_model(model, ws.model_path().string());
  detail::log_line("train: " + std::to_string(sets.size()) +
                   " images -> " + ws.model_path().string());
}

// ---------------------------------------------------------------------------
// encode
// ---------------------------------------------------------------------------

inline std::size_t run_encode(const Workspace& ws, RunConfig cfg) {
  cfg.sampling.seed = cfg.seed;
  cfg.encoder.seed = cfg.seed;
  detail::check_extract_stage(ws, cfg);
  const std::uint64_t expected = encode_config_hash(cfg);

  if (std::filesystem::exists(ws.encodings_path())) {
    try {
      const EncodingFile existing =
          load_encodings(ws.encodings_path().string());
      if (existing.config_hash == expected && !existing.esvm_transformed()) {
        detail::log_line("encode: encodings are up to date");
        return existing.descriptors.size();
      }
    } catch (const Error&) {
    }
  }

  if (!std::filesystem::exists(ws.model_path())) {
    throw MissingFileError("missing " + ws.model_path().string() +
                           "; run train first");
  }
  const EncoderModel model = load_encoder_model(ws.model_path().string());
  if (model.config_hash != train_config_hash(cfg)) {
    throw StaleArtifactError(
        "model is stale for this configuration; re-run train");
  }

  const Manifest manifest = load_manifest(ws.manifest_path().string());
  std::vector<GlobalDescriptor> slots(manifest.rows.size());
  std::vector<char> empty_set(manifest.rows.size(), 0);
  parallel_for(manifest.rows.size(), cfg.threads, [&](std::size_t i) {
    const DescriptorSet ds =
        detail::load_row_descriptors(ws, manifest.rows[i]);
    if (ds.empty()) {
      empty_set[i] = 1;
      return;
    }
    slots[i] = encode_image(ds, model);
  });

  EncodingFile file;
  file.flags = 0;
  file.config_hash = expected;
  file.seed = cfg.seed;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (empty_set[i]) {
      detail::log_line("encode: warning: no descriptors for " +
                       manifest.rows[i].image_id + ", skipped");
      continue;
    }
    file.descriptors.push_back(std::move(slots[i]));
  }
  if (file.descriptors.empty()) {
    throw ValidationError("encode: every image came out empty");
  }
  save_encodings(file, ws.encodings_path().string());
  detail::log_line("encode: " + std::to_string(file.descriptors.size()) +
                   " encodings -> " + ws.encodings_path().string());
  return file.descriptors.size();
}

// ---------------------------------------------------------------------------
// esvm
// ---------------------------------------------------------------------------

inline EsvmTransformStats run_esvm(const Workspace& ws, RunConfig cfg) {
  if (!std::filesystem::exists(ws.encodings_path())) {
    throw MissingFileError("missing " + ws.encodings_path().string() +
                           "; run encode first");
  }
  EncodingFile file = load_encodings(ws.encodings_path().string());
  if (file.config_hash != encode_config_hash(cfg)) {
    throw StaleArtifactError(
        "encodings are stale for this configuration; re-run encode");
  }
  const std::uint64_t expected = esvm_config_hash(cfg);
  if (std::filesystem::exists(ws.esvm_encodings_path())) {
    try {
      const EncodingFile existing =
          load_encodings(ws.esvm_encodings_path().string());
      if (existing.config_hash == expected && existing.esvm_transformed()) {
        detail::log_line("esvm: transformed encodings are up to date");
        return {};
      }
    } catch (const Error&) {
    }
  }

  const Manifest manifest = load_manifest(ws.manifest_path().string());
  std::unordered_map<std::string, const ManifestRow*> by_id;
  for (const auto& row : manifest.rows) by_id[row.image_id] = &row;

  std::vector<std::size_t> test_idx;
  std::vector<const GlobalDescriptor*> train_items;
  for (std::size_t i = 0; i < file.descriptors.size(); ++i) {
    const auto it = by_id.find(file.descriptors[i].image_id);
    if (it == by_id.end()) {
      throw ValidationError("esvm: encoding for unknown image " +
                            file.descriptors[i].image_id);
    }
    if (it->second->split == "train") {
      train_items.push_back(&file.descriptors[i]);
    } else {
      test_idx.push_back(i);
    }
  }
  if (train_items.empty()) {
    throw ValidationError("esvm: no train encodings to use as negatives");
  }
  if (test_idx.empty()) {
    throw NoTestImagesError("esvm: no test encodings to transform");
  }

  const int dim = train_items[0]->dim();
  Eigen::MatrixXd negatives(static_cast<Eigen::Index>(train_items.size()),
                            dim);
  for (std::size_t r = 0; r < train_items.size(); ++r) {
    for (int j = 0; j < dim; ++j) {
      negatives(static_cast<Eigen::Index>(r), j) = static_cast<double>(
          train_items[r]->values[static_cast<std::size_t>(j)]);
    }
  }

  std::vector<GlobalDescriptor> test_items;
  test_items.reserve(test_idx.size());
  for (std::size_t i : test_idx) test_items.push_back(file.descriptors[i]);
  const EsvmTransformStats stats =
      esvm_transform_all(test_items, negatives, cfg.esvm, cfg.threads);
  for (std::size_t k = 0; k < test_idx.size(); ++k) {
    file.descriptors[test_idx[k]] = std::move(test_items[k]);
  }
  if (stats.degenerate > 0) {
    detail::log_line("esvm: warning: " + std::to_string(stats.degenerate) +
                     " degenerate exemplar(s) kept their encoding");
  }

  file.flags = kEncodingFlagEsvm;
  file.config_hash = expected;
  save_encodings(file, ws.esvm_encodings_path().string());
  detail::log_line("esvm: " + std::to_string(test_idx.size()) +
                   " encodings -> " + ws.esvm_encodings_path().string());
  return stats;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

inline MetricsReport run_evaluate(const Workspace& ws, const RunConfig& cfg) {
  const std::filesystem::path enc_path =
      cfg.esvm_enabled ? ws.esvm_encodings_path() : ws.encodings_path();
  if (!std::filesystem::exists(enc_path)) {
    throw MissingFileError(
        "missing " + enc_path.string() + "; run " +
        (cfg.esvm_enabled ? std::string("esvm") : std::string("encode")) +
        " first");
  }
  const EncodingFile file = load_encodings(enc_path.string());
  const std::uint64_t expected =
      cfg.esvm_enabled ? esvm_config_hash(cfg) : encode_config_hash(cfg);
  if (file.config_hash != expected) {
    throw StaleArtifactError(
        "encodings are stale for this configuration; re-run the pipeline");
  }
  if (file.esvm_transformed() != cfg.esvm_enabled) {
    throw StaleArtifactError("encoding file esvm flag does not match --esvm");
  }

  const Manifest manifest = load_manifest(ws.manifest_path().string());
  std::unordered_map<std::string, const ManifestRow*> by_id;
  for (const auto& row : manifest.rows) by_id[row.image_id] = &row;

  std::vector<EvalItem> items;
  for (const auto& g : file.descriptors) {
    const auto it = by_id.find(g.image_id);
    if (it == by_id.end()) {
      throw ValidationError("evaluate: encoding for unknown image " +
                            g.image_id);
    }
    if (it->second->split != "test") continue;
    items.push_back({g.image_id, it->second->document_id,
                     it->second->type_label, g.values});
  }
  if (items.empty()) {
    throw NoTestImagesError("evaluate: no test-split encodings");
  }

  const MetricsReport report =
      evaluate_retrieval(items, cfg.protocol, cfg.threads);

  nlohmann::json j;
  j["protocol"] = protocol_name(cfg.protocol);
  j["esvm"] = cfg.esvm_enabled;
  j["top1_percent"] = report.top1_percent;
  j["top10_percent"] = report.top10_percent;
  j["map_percent"] = report.map_percent;
  j["scored"] = report.scored;
  j["excluded"] = report.excluded;
  j["config_hash"] = detail::fmt_u64_hex(expected);
  j["seed"] = cfg.seed;
  std::ofstream out(ws.metrics_path(), std::ios::trunc);
  if (!out) throw IoError("cannot write " + ws.metrics_path().string());
  out << j.dump(2) << "\n";
  return report;
}

// ---------------------------------------------------------------------------
// patches
// ---------------------------------------------------------------------------

inline std::size_t run_patches(const Workspace& ws, const RunConfig& cfg,
                               const std::string& out_dir) {
  if (cfg.patches_per_type == 0) {
    throw ValidationError("patches: count must be positive");
  }
  validate_augment_policy(cfg.augment);
  if (cfg.augment_enabled && (cfg.patch_size < cfg.augment.crop_w ||
                              cfg.patch_size < cfg.augment.crop_h)) {
    throw ValidationError(
        "patches: patch size " + std::to_string(cfg.patch_size) +
        " is smaller than the " + std::to_string(cfg.augment.crop_w) + "x" +
        std::to_string(cfg.augment.crop_h) + " augmentation crop");
  }
  const Manifest manifest = load_manifest(ws.manifest_path().string());

  std::map<std::string, std::vector<const ManifestRow*>> by_type;
  for (const auto& row : manifest.rows) {
    if (row.split == "train") by_type[row.type_label].push_back(&row);
  }
  if (by_type.empty()) {
    throw ValidationError("patches: manifest has no train rows");
  }

  namespace fs = std::filesystem;
  std::size_t written = 0;
  for (const auto& [type, rows] : by_type) {
    Rng rng(derive_seed(cfg.seed, "patches:" + type));

    std::vector<RgbImage> images;
    for (const ManifestRow* row : rows) {
      RgbImage img = load_rgb(row->path);
      if (img.width < cfg.patch_size || img.height < cfg.patch_size) {
        detail::log_line("patches: warning: " + row->image_id +
                         " is smaller than the patch size, skipped");
        continue;
      }
      images.push_back(std::move(img));
    }
    if (images.empty()) {
      throw ValidationError("patches: no usable train images for type " +
                            type);
    }

    const fs::path dir = fs::path(out_dir) / type;
    fs::create_directories(dir);
    const std::size_t n = images.size();
    const std::size_t base = cfg.patches_per_type / n;
    const std::size_t rem = cfg.patches_per_type % n;
    std::size_t serial = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t quota = base + (i < rem ? 1 : 0);
      const auto patches = sample_patches(images[i], quota, cfg.patch_size,
                                          cfg.patch_size, rng);
      for (const RgbImage& patch : patches) {
        RgbImage final_patch = patch;
        if (cfg.augment_enabled) {
          const AugmentParams params =
              sample_augment_params(cfg.augment, rng);
          final_patch = apply_augment(patch, params, cfg.augment);
        }
        char name[32];
        std::snprintf(name, sizeof(name), "p%05zu.png", serial++);
        save_png(dir / name, final_patch);
        ++written;
      }
    }
  }
  detail::log_line("patches: " + std::to_string(written) + " -> " + out_dir);
  return written;
}

}  // namespace typeforge

#endif  // TYPEFORGE_PIPELINE_HPP_
