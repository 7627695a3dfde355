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

#ifndef TYPEFORGE_ESVM_HPP_
#define TYPEFORGE_ESVM_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "typeforge/encoder.hpp"
#include "typeforge/errors.hpp"
#include "typeforge/parallel.hpp"

namespace typeforge {

struct EsvmConfig {
  double c_pos = 1000.0;
  double c_neg = 1.0;
  double tolerance = 1e-6;  // projected-gradient stopping threshold
  int max_passes = 2000;    // full coordinate sweeps
};

struct EsvmResult {
  Eigen::VectorXd w;        // l2-normalized, bias component removed
  double bias = 0.0;
  bool degenerate = false;  // weight collapsed to (numerically) zero
  int passes = 0;
};

// L1-loss exemplar SVM: one positive against a matrix of negatives (rows).
// Solved in the dual by cyclic coordinate descent on
//   min 1/2 a^T Q a - e^T a,  0 <= a_i <= C_i,
// with the bias folded in as a constant 1 feature (so it is regularized).
// The sweep order is fixed (positive, then negatives in row order), which
// makes the result deterministic.
inline EsvmResult train_exemplar_svm(const Eigen::VectorXd& positive,
                                     const Eigen::MatrixXd& negatives,
                                     const EsvmConfig& cfg = {}) {
  const Eigen::Index d = positive.size();
  const Eigen::Index n_neg = negatives.rows();
  if (d == 0) throw ValidationError("train_exemplar_svm: empty positive");
  if (n_neg == 0) {
    throw ValidationError("train_exemplar_svm: need at least one negative");
  }
  if (negatives.cols() != d) {
    throw DimensionMismatchError("train_exemplar_svm: dim mismatch");
  }
  if (cfg.c_pos <= 0.0 || cfg.c_neg <= 0.0) {
    throw ValidationError("train_exemplar_svm: non-positive C");
  }
  if (cfg.max_passes < 1) {
    throw ValidationError("train_exemplar_svm: max_passes < 1");
  }

  const Eigen::Index n = n_neg + 1;
  // Instance i: label y_i, augmented feature [x_i; 1].
  const auto label = [&](Eigen::Index i) { return i == 0 ? 1.0 : -1.0; };
  const auto cost = [&](Eigen::Index i) {
    return i == 0 ? cfg.c_pos : cfg.c_neg;
  };
  const auto row = [&](Eigen::Index i) -> Eigen::VectorXd {
    return i == 0 ? positive : Eigen::VectorXd(negatives.row(i - 1));
  };

  Eigen::VectorXd q_diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    q_diag[i] = row(i).squaredNorm() + 1.0;  // + bias feature
  }

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double bias = 0.0;

  EsvmResult result;
  for (int pass = 0; pass < cfg.max_passes; ++pass) {
    double max_pg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = label(i);
      const Eigen::VectorXd xi = row(i);
      const double margin = y * (w.dot(xi) + bias) - 1.0;  // gradient

      double pg = margin;
      if (alpha[i] <= 0.0) {
        pg = std::min(margin, 0.0);
      } else if (alpha[i] >= cost(i)) {
        pg = std::max(margin, 0.0);
      }
      max_pg = std::max(max_pg, std::fabs(pg));
      if (pg == 0.0) continue;

      const double old = alpha[i];
      alpha[i] = std::clamp(old - margin / q_diag[i], 0.0, cost(i));
      const double delta = (alpha[i] - old) * y;
      if (delta != 0.0) {
        w += delta * xi;
        bias += delta;
      }
    }
    result.passes = pass + 1;
    if (max_pg < cfg.tolerance) break;
  }

  result.bias = bias;
  const double norm = w.norm();
  if (norm < 1e-12) {
    result.degenerate = true;
    result.w = Eigen::VectorXd::Zero(d);
  } else {
    result.w = w / norm;
  }
  return result;
}

// Primal objective of the exemplar SVM, bias regularized. Used to certify
// convergence against an independent solver.
inline double esvm_primal_objective(const Eigen::VectorXd& w, double bias,
                                    const Eigen::VectorXd& positive,
                                    const Eigen::MatrixXd& negatives,
                                    const EsvmConfig& cfg) {
  double obj = 0.5 * (w.squaredNorm() + bias * bias);
  obj += cfg.c_pos * std::max(0.0, 1.0 - (w.dot(positive) + bias));
  for (Eigen::Index i = 0; i < negatives.rows(); ++i) {
    obj += cfg.c_neg *
           std::max(0.0, 1.0 + (w.dot(negatives.row(i)) + bias));
  }
  return obj;
}

struct EsvmTransformStats {
  std::size_t transformed = 0;
  std::size_t degenerate = 0;  // kept their original encoding
};

// Replaces every descriptor with the normalized w of an exemplar SVM that
// separates it from the shared negatives. Degenerate items keep their
// original values.
inline EsvmTransformStats esvm_transform_all(
    std::vector<GlobalDescriptor>& items, const Eigen::MatrixXd& negatives,
    const EsvmConfig& cfg = {}, int threads = 1) {
  if (items.empty()) return {};
  const Eigen::Index d = static_cast<Eigen::Index>(items[0].values.size());
  if (negatives.cols() != d) {
    throw DimensionMismatchError("esvm_transform_all: dim mismatch");
  }
  std::vector<char> failed(items.size(), 0);
  parallel_for(items.size(), threads, [&](std::size_t i) {
    GlobalDescriptor& g = items[i];
    if (static_cast<Eigen::Index>(g.values.size()) != d) {
      throw DimensionMismatchError("esvm_transform_all: ragged encodings");
    }
    Eigen::VectorXd x(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      x[j] = static_cast<double>(g.values[static_cast<std::size_t>(j)]);
    }
    const EsvmResult r = train_exemplar_svm(x, negatives, cfg);
    if (r.degenerate) {
      failed[i] = 1;
      return;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      g.values[static_cast<std::size_t>(j)] = static_cast<float>(r.w[j]);
    }
  });
  EsvmTransformStats stats;
  stats.transformed = items.size();
  for (char f : failed) {
    if (f) ++stats.degenerate;
  }
  return stats;
}

}  // namespace typeforge

#endif  // TYPEFORGE_ESVM_HPP_
