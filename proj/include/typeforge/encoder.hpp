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

#ifndef TYPEFORGE_ENCODER_HPP_
#define TYPEFORGE_ENCODER_HPP_

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "typeforge/binio.hpp"
#include "typeforge/embedding.hpp"
#include "typeforge/errors.hpp"
#include "typeforge/features.hpp"
#include "typeforge/parallel.hpp"

namespace typeforge {

struct EncoderConfig {
  int codebook_size = 100;
  int num_codebooks = 5;
  int local_dim = 128;       // cap for the local whitening output
  int target_dim = 6400;     // cap for the joint whitening output
  double dirichlet_eps = 0.01;
  double power = 0.5;
  double whitening_eps_rel = 1e-8;
  int kmeans_iters = 100;
  // Whitening and codebooks train on at most this many pooled descriptors,
  // subsampled deterministically from the seed. 0 means no cap.
  std::int64_t max_train_descriptors = 200000;
  GmpConfig gmp;
  std::uint64_t seed = 0;    // codebook i trains with seed + i
};

struct EncoderModel {
  EncoderConfig config;
  WhiteningTransform local_whitening;
  std::vector<Codebook> codebooks;
  WhiteningTransform joint_whitening;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  int descriptor_dim() const { return local_whitening.input_dim(); }
  int local_out_dim() const { return local_whitening.output_dim(); }
  int vlad_dim() const {
    return static_cast<int>(codebooks.size()) * config.codebook_size *
           local_out_dim();
  }
  int output_dim() const { return joint_whitening.output_dim(); }
};

struct GlobalDescriptor {
  std::string image_id;
  std::vector<float> values;

  int dim() const { return static_cast<int>(values.size()); }
};

namespace detail {

// Dirichlet normalization of every descriptor of a set, as matrix rows.
inline Eigen::MatrixXd dirichlet_rows(const DescriptorSet& ds, double eps) {
  const Eigen::Index n = static_cast<Eigen::Index>(ds.size());
  Eigen::MatrixXd out(n, DescriptorSet::kDim);
  Eigen::VectorXd row(DescriptorSet::kDim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const float* src = ds.descriptor(static_cast<std::size_t>(i));
    for (int j = 0; j < DescriptorSet::kDim; ++j) {
      row[j] = static_cast<double>(src[j]);
    }
    out.row(i) = dirichlet_normalize(row, eps).transpose();
  }
  return out;
}

// Stable lexicographic order of the rows of X. Encoding pools descriptors
// in this canonical order, which makes the result independent of the order
// descriptors arrive in.
inline std::vector<int> lexicographic_row_order(const Eigen::MatrixXd& X) {
  std::vector<int> order(static_cast<std::size_t>(X.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&X](int a, int b) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (X(a, j) != X(b, j)) return X(a, j) < X(b, j);
    }
    return false;
  });
  return order;
}

// VLAD + GMP over one codebook: per-cluster GMP on the residual rows,
// blocks concatenated, then power + l2. Phi has one whitened descriptor
// per row, already in canonical order.
inline Eigen::VectorXd encode_one_codebook(const Eigen::MatrixXd& Phi,
                                           const Codebook& cb,
                                           const GmpConfig& gmp,
                                           double power) {
  const int k = cb.k();
  const int m = cb.dim();
  std::vector<int> assign;
  assign_clusters(Phi, cb.centroids, assign);

  std::vector<std::vector<int>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < assign.size(); ++i) {
    members[static_cast<std::size_t>(assign[i])].push_back(
        static_cast<int>(i));
  }
  Eigen::VectorXd out =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k) * m);
  for (int j = 0; j < k; ++j) {
    const auto& rows = members[static_cast<std::size_t>(j)];
    if (rows.empty()) continue;
    Eigen::MatrixXd R(static_cast<Eigen::Index>(rows.size()), m);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      R.row(static_cast<Eigen::Index>(r)) =
          Phi.row(rows[r]) - cb.centroids.row(j);
    }
    out.segment(static_cast<Eigen::Index>(j) * m, m) = gmp_pool(R, gmp);
  }
  return power_l2(out, power);
}

// Whitened, canonically ordered descriptor rows -> concatenated VLAD/GMP
// vector over all codebooks.
inline Eigen::VectorXd encode_vlad_concat(const Eigen::MatrixXd& whitened,
                                          const EncoderModel& model) {
  const int m = model.local_out_dim();
  const int k = model.config.codebook_size;
  const Eigen::Index block = static_cast<Eigen::Index>(k) * m;
  Eigen::VectorXd out(
      block * static_cast<Eigen::Index>(model.codebooks.size()));
  for (std::size_t c = 0; c < model.codebooks.size(); ++c) {
    out.segment(static_cast<Eigen::Index>(c) * block, block) =
        encode_one_codebook(whitened, model.codebooks[c], model.config.gmp,
                            model.config.power);
  }
  return out;
}

inline Eigen::MatrixXd sorted_rows(const Eigen::MatrixXd& X) {
  const std::vector<int> order = lexicographic_row_order(X);
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out.row(i) = X.row(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace detail

// Trains local whitening, the codebooks, and the joint whitening from the
// descriptor sets. Empty sets are skipped; at least two non-empty sets are
// required, and the pooled descriptor count must reach codebook_size.
inline EncoderModel fit_encoder(const std::vector<DescriptorSet>& sets,
                                const EncoderConfig& config,
                                int threads = 1) {
  if (config.codebook_size < 1 || config.num_codebooks < 1 ||
      config.local_dim < 1 || config.target_dim < 1) {
    throw ValidationError("fit_encoder: non-positive size parameter");
  }
  std::vector<const DescriptorSet*> used;
  for (const auto& ds : sets) {
    if (!ds.empty()) used.push_back(&ds);
  }
  if (used.size() < 2) {
    throw TooFewSamplesError(
        "fit_encoder: need at least 2 non-empty descriptor sets");
  }
  std::size_t total = 0;
  for (const auto* ds : used) total += ds->size();
  if (total < static_cast<std::size_t>(config.codebook_size)) {
    throw TooFewSamplesError(
        "fit_encoder: fewer pooled descriptors than codebook_size");
  }

  EncoderModel model;
  model.config = config;
  model.seed = config.seed;

  // The pooled descriptors are capped for whitening and codebook training;
  // the selection is a sorted subsample so it is a subsequence of the full
  // pool and independent of thread count.
  std::vector<std::uint64_t> keep;  // global row indices, ascending
  {
    std::vector<std::uint64_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    if (config.max_train_descriptors > 0 &&
        total > static_cast<std::size_t>(config.max_train_descriptors)) {
      Rng rng(derive_seed(config.seed, "train-pool"));
      rng.shuffle(idx);
      idx.resize(static_cast<std::size_t>(config.max_train_descriptors));
      std::sort(idx.begin(), idx.end());
    }
    keep = std::move(idx);
  }
  if (keep.size() < static_cast<std::size_t>(
                        std::max(2, config.codebook_size))) {
    throw ValidationError(
        "fit_encoder: max_train_descriptors leaves too few descriptors");
  }

  Eigen::MatrixXd pool(static_cast<Eigen::Index>(keep.size()),
                       DescriptorSet::kDim);
  {
    std::size_t cursor = 0;       // position in keep
    std::uint64_t base = 0;       // global index of the current set's row 0
    for (const auto* ds : used) {
      const std::uint64_t end = base + ds->size();
      if (cursor < keep.size() && keep[cursor] < end) {
        const Eigen::MatrixXd rows =
            detail::dirichlet_rows(*ds, config.dirichlet_eps);
        while (cursor < keep.size() && keep[cursor] < end) {
          pool.row(static_cast<Eigen::Index>(cursor)) =
              rows.row(static_cast<Eigen::Index>(keep[cursor] - base));
          ++cursor;
        }
      }
      base = end;
    }
  }

  model.local_whitening =
      fit_whitening(pool, config.local_dim, config.whitening_eps_rel);
  const Eigen::MatrixXd whitened = model.local_whitening.apply_rows(pool);
  pool.resize(0, 0);

  model.codebooks.resize(static_cast<std::size_t>(config.num_codebooks));
  for (int c = 0; c < config.num_codebooks; ++c) {
    model.codebooks[static_cast<std::size_t>(c)] =
        fit_codebook(whitened, config.codebook_size,
                     config.seed + static_cast<std::uint64_t>(c),
                     config.kmeans_iters);
  }

  // Per-image VLAD/GMP vectors feed the joint whitening.
  Eigen::MatrixXd E(static_cast<Eigen::Index>(used.size()),
                    static_cast<Eigen::Index>(model.vlad_dim()));
  parallel_for(used.size(), threads, [&](std::size_t i) {
    const Eigen::MatrixXd rows = detail::sorted_rows(
        model.local_whitening.apply_rows(
            detail::dirichlet_rows(*used[i], config.dirichlet_eps)));
    E.row(static_cast<Eigen::Index>(i)) =
        detail::encode_vlad_concat(rows, model).transpose();
  });

  model.joint_whitening =
      fit_whitening(E, config.target_dim, config.whitening_eps_rel);
  return model;
}

// Full per-image encoding: Dirichlet -> local whitening -> canonical order
// -> VLAD/GMP per codebook -> concat -> joint whitening -> l2 -> float32.
inline GlobalDescriptor encode_image(const DescriptorSet& ds,
                                     const EncoderModel& model) {
  if (ds.empty()) {
    throw EmptyDescriptorSetError("encode_image: no descriptors for " +
                                  ds.image_id);
  }
  const Eigen::MatrixXd rows =
      detail::dirichlet_rows(ds, model.config.dirichlet_eps);
  if (rows.cols() != model.descriptor_dim()) {
    throw DimensionMismatchError("encode_image: descriptor dim mismatch");
  }
  const Eigen::MatrixXd whitened =
      detail::sorted_rows(model.local_whitening.apply_rows(rows));
  const Eigen::VectorXd vlad = detail::encode_vlad_concat(whitened, model);
  Eigen::VectorXd out = model.joint_whitening.apply(vlad);
  const double norm = out.norm();
  if (norm > 0.0) out /= norm;

  GlobalDescriptor g;
  g.image_id = ds.image_id;
  g.values.resize(static_cast<std::size_t>(out.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    g.values[static_cast<std::size_t>(i)] = static_cast<float>(out[i]);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Model file (TFEM)
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kEncoderFileVersion = 1;

namespace detail {

inline void write_matrix_f32(std::ostream& out, const Eigen::MatrixXd& M) {
  write_u32le(out, static_cast<std::uint32_t>(M.rows()));
  write_u32le(out, static_cast<std::uint32_t>(M.cols()));
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      write_f32le(out, static_cast<float>(M(i, j)));
    }
  }
}

inline Eigen::MatrixXd read_matrix_f32(std::istream& in) {
  const std::uint32_t rows = read_u32le(in);
  const std::uint32_t cols = read_u32le(in);
  if (rows > (1u << 24) || cols > (1u << 24)) {
    throw IoError("model file: implausible matrix size");
  }
  Eigen::MatrixXd M(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) {
      M(i, j) = static_cast<double>(read_f32le(in));
    }
  }
  return M;
}

inline void write_vector_f32(std::ostream& out, const Eigen::VectorXd& v) {
  write_matrix_f32(out, Eigen::MatrixXd(v.transpose()));
}

inline Eigen::VectorXd read_vector_f32(std::istream& in) {
  const Eigen::MatrixXd M = read_matrix_f32(in);
  if (M.rows() != 1) throw IoError("model file: expected a row vector");
  return M.row(0).transpose();
}

}  // namespace detail

inline void save_encoder_model(const EncoderModel& model,
                               const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write("TFEM", 4);
  write_u16le(out, kEncoderFileVersion);
  write_u64le(out, model.config_hash);
  write_u64le(out, model.seed);
  const EncoderConfig& c = model.config;
  write_u32le(out, static_cast<std::uint32_t>(c.codebook_size));
  write_u32le(out, static_cast<std::uint32_t>(c.num_codebooks));
  write_u32le(out, static_cast<std::uint32_t>(c.local_dim));
  write_u32le(out, static_cast<std::uint32_t>(c.target_dim));
  write_f64le(out, c.dirichlet_eps);
  write_f64le(out, c.power);
  write_f64le(out, c.whitening_eps_rel);
  write_f64le(out, c.gmp.lambda);
  write_f64le(out, c.gmp.tolerance);
  write_u32le(out, static_cast<std::uint32_t>(c.kmeans_iters));
  write_u64le(out, static_cast<std::uint64_t>(
                       c.max_train_descriptors < 0
                           ? 0
                           : c.max_train_descriptors));
  detail::write_vector_f32(out, model.local_whitening.mean);
  detail::write_matrix_f32(out, model.local_whitening.basis);
  write_f64le(out, model.local_whitening.eps_abs);
  write_u32le(out, static_cast<std::uint32_t>(model.codebooks.size()));
  for (const auto& cb : model.codebooks) {
    detail::write_matrix_f32(out, cb.centroids);
  }
  detail::write_vector_f32(out, model.joint_whitening.mean);
  detail::write_matrix_f32(out, model.joint_whitening.basis);
  write_f64le(out, model.joint_whitening.eps_abs);
  if (!out) throw IoError("write failed: " + path);
}

inline EncoderModel load_encoder_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != "TFEM") {
    throw IoError("not a model file: " + path);
  }
  const std::uint16_t version = read_u16le(in);
  if (version != kEncoderFileVersion) {
    throw IoError("unsupported model file version");
  }
  EncoderModel model;
  model.config_hash = read_u64le(in);
  model.seed = read_u64le(in);
  EncoderConfig& c = model.config;
  c.codebook_size = static_cast<int>(read_u32le(in));
  c.num_codebooks = static_cast<int>(read_u32le(in));
  c.local_dim = static_cast<int>(read_u32le(in));
  c.target_dim = static_cast<int>(read_u32le(in));
  c.dirichlet_eps = read_f64le(in);
  c.power = read_f64le(in);
  c.whitening_eps_rel = read_f64le(in);
  c.gmp.lambda = read_f64le(in);
  c.gmp.tolerance = read_f64le(in);
  c.kmeans_iters = static_cast<int>(read_u32le(in));
  c.max_train_descriptors = static_cast<std::int64_t>(read_u64le(in));
  c.seed = model.seed;
  model.local_whitening.mean = detail::read_vector_f32(in);
  model.local_whitening.basis = detail::read_matrix_f32(in);
  model.local_whitening.eps_abs = read_f64le(in);
  const std::uint32_t n_cb = read_u32le(in);
  if (n_cb > 1024) throw IoError("model file: implausible codebook count");
  model.codebooks.resize(n_cb);
  for (std::uint32_t i = 0; i < n_cb; ++i) {
    model.codebooks[i].centroids = detail::read_matrix_f32(in);
  }
  model.joint_whitening.mean = detail::read_vector_f32(in);
  model.joint_whitening.basis = detail::read_matrix_f32(in);
  model.joint_whitening.eps_abs = read_f64le(in);
  if (!in) throw IoError("truncated model file: " + path);
  return model;
}

// ---------------------------------------------------------------------------
// Encoding file (TFGE)
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kEncodingFileVersion = 1;
inline constexpr std::uint8_t kEncodingFlagEsvm = 0x01;

struct EncodingFile {
  std::uint8_t flags = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<GlobalDescriptor> descriptors;

  bool esvm_transformed() const { return (flags & kEncodingFlagEsvm) != 0; }
};

inline void save_encodings(const EncodingFile& file,
                           const std::string& path) {
  std::uint32_t dim = 0;
  for (const auto& g : file.descriptors) {
    if (dim == 0) {
      dim = static_cast<std::uint32_t>(g.values.size());
    } else if (g.values.size() != dim) {
      throw DimensionMismatchError("save_encodings: inconsistent dims");
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write("TFGE", 4);
  write_u16le(out, kEncodingFileVersion);
  out.put(static_cast<char>(file.flags));
  write_u64le(out, file.config_hash);
  write_u64le(out, file.seed);
  write_u32le(out, static_cast<std::uint32_t>(file.descriptors.size()));
  write_u32le(out, dim);
  for (const auto& g : file.descriptors) {
    write_string32(out, g.image_id);
    for (float v : g.values) write_f32le(out, v);
  }
  if (!out) throw IoError("write failed: " + path);
}

inline EncodingFile load_encodings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != "TFGE") {
    throw IoError("not an encoding file: " + path);
  }
  const std::uint16_t version = read_u16le(in);
  if (version != kEncodingFileVersion) {
    throw IoError("unsupported encoding file version");
  }
  EncodingFile file;
  const int flags = in.get();
  if (flags < 0) throw IoError("truncated encoding file: " + path);
  file.flags = static_cast<std::uint8_t>(flags);
  file.config_hash = read_u64le(in);
  file.seed = read_u64le(in);
  const std::uint32_t count = read_u32le(in);
  const std::uint32_t dim = read_u32le(in);
  if (count > (1u << 24) || dim > (1u << 24)) {
    throw IoError("encoding file: implausible sizes");
  }
  file.descriptors.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    file.descriptors[i].image_id = read_string32(in);
    file.descriptors[i].values.resize(dim);
    for (std::uint32_t j = 0; j < dim; ++j) {
      file.descriptors[i].values[j] = read_f32le(in);
    }
  }
  if (!in) throw IoError("truncated encoding file: " + path);
  return file;
}

}  // namespace typeforge

#endif  // TYPEFORGE_ENCODER_HPP_
