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

#ifndef TYPEFORGE_EMBEDDING_HPP_
#define TYPEFORGE_EMBEDDING_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "typeforge/errors.hpp"
#include "typeforge/rng.hpp"

namespace typeforge {

// sqrt of the Dirichlet-smoothed distribution: out_i =
// sqrt((v_i + eps) / (sum(v) + dim * eps)). Inputs must be non-negative.
inline Eigen::VectorXd dirichlet_normalize(const Eigen::VectorXd& v,
                                           double eps) {
  if (v.size() == 0) throw EmptyMatrixError("dirichlet_normalize: empty");
  if (eps <= 0.0) throw ValidationError("dirichlet_normalize: eps <= 0");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0) {
      throw ValidationError("dirichlet_normalize: negative component");
    }
    sum += v[i];
  }
  const double denom = sum + static_cast<double>(v.size()) * eps;
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[i] = std::sqrt((v[i] + eps) / denom);
  }
  return out;
}

// Signed power then l2 normalization; the zero vector stays zero.
inline Eigen::VectorXd power_l2(const Eigen::VectorXd& v, double alpha = 0.5) {
  if (alpha <= 0.0 || alpha > 1.0) {
    throw ValidationError("power_l2: alpha must be in (0, 1]");
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::fabs(v[i]);
    out[i] = v[i] < 0.0 ? -std::pow(a, alpha) : std::pow(a, alpha);
  }
  const double norm = out.norm();
  if (norm > 0.0) out /= norm;
  return out;
}

// ---------------------------------------------------------------------------
// PCA whitening
// ---------------------------------------------------------------------------

struct WhiteningTransform {
  Eigen::VectorXd mean;    // input dim
  Eigen::MatrixXd basis;   // output_dim x input_dim, rows scaled by
                           // 1/sqrt(eigenvalue + eps)
  double eps_abs = 0.0;    // absolute ridge that was applied

  int input_dim() const { return static_cast<int>(mean.size()); }
  int output_dim() const { return static_cast<int>(basis.rows()); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    if (x.size() != mean.size()) {
      throw DimensionMismatchError("WhiteningTransform: input dim mismatch");
    }
    return basis * (x - mean);
  }

  // Rows of X are samples.
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size()) {
      throw DimensionMismatchError("WhiteningTransform: input dim mismatch");
    }
    return (X.rowwise() - mean.transpose()) * basis.transpose();
  }
};

// Fits PCA whitening on the rows of X. The output dimension is
// min(target_dim, d, n - 1, numerical rank); eigenvalues below
// 1e-9 * lambda_max are treated as null space. The ridge added under the
// square root is eps_rel * lambda_max.
inline WhiteningTransform fit_whitening(const Eigen::MatrixXd& X,
                                        int target_dim,
                                        double eps_rel = 1e-8) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 2) throw TooFewSamplesError("fit_whitening: need at least 2 rows");
  if (d < 1) throw EmptyMatrixError("fit_whitening: no columns");
  if (target_dim < 1) throw ValidationError("fit_whitening: target_dim < 1");
  if (eps_rel < 0.0) throw ValidationError("fit_whitening: eps_rel < 0");

  WhiteningTransform t;
  t.mean = X.colwise().mean();
  const Eigen::MatrixXd Xc = X.rowwise() - t.mean.transpose();
  const int m_cap = static_cast<int>(
      std::min<Eigen::Index>({static_cast<Eigen::Index>(target_dim), d,
                              n - 1}));

  // Eigenvalues of the sample covariance (descending) and unit directions.
  Eigen::VectorXd lambda;
  Eigen::MatrixXd dirs;  // d x m_cap
  if (d <= n) {
    const Eigen::MatrixXd C =
        (Xc.transpose() * Xc) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    if (es.info() != Eigen::Success) {
      throw NumericalError("fit_whitening: eigendecomposition failed");
    }
    lambda.resize(m_cap);
    dirs.resize(d, m_cap);
    for (int i = 0; i < m_cap; ++i) {
      lambda[i] = es.eigenvalues()[d - 1 - i];
      dirs.col(i) = es.eigenvectors().col(d - 1 - i);
    }
  } else {
    // Snapshot path: eigenvectors of the Gram matrix lift to input space.
    const Eigen::MatrixXd G = Xc * Xc.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    if (es.info() != Eigen::Success) {
      throw NumericalError("fit_whitening: eigendecomposition failed");
    }
    lambda.resize(m_cap);
    dirs.resize(d, m_cap);
    for (int i = 0; i < m_cap; ++i) {
      const double mu = std::max(0.0, es.eigenvalues()[n - 1 - i]);
      lambda[i] = mu / static_cast<double>(n - 1);
      if (mu > 0.0) {
        dirs.col(i) =
            Xc.transpose() * es.eigenvectors().col(n - 1 - i) / std::sqrt(mu);
      } else {
        dirs.col(i).setZero();
      }
    }
  }

  const double lambda_max = std::max(0.0, lambda.size() > 0 ? lambda[0] : 0.0);
  if (lambda_max <= 0.0) {
    throw DegenerateInputError("fit_whitening: input has zero variance");
  }
  int m = 0;
  while (m < m_cap && lambda[m] > lambda_max * 1e-9) ++m;
  if (m == 0) {
    throw DegenerateInputError("fit_whitening: no usable components");
  }
  t.eps_abs = eps_rel * lambda_max;
  t.basis.resize(m, d);
  for (int i = 0; i < m; ++i) {
    t.basis.row(i) =
        dirs.col(i).transpose() / std::sqrt(lambda[i] + t.eps_abs);
  }
  return t;
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

struct Codebook {
  Eigen::MatrixXd centroids;  // k x dim

  int k() const { return static_cast<int>(centroids.rows()); }
  int dim() const { return static_cast<int>(centroids.cols()); }
};

// Hard assignment by squared Euclidean distance; ties go to the lowest
// centroid index. The per-row squared norm of X cancels in the argmin, so
// scores are ||c_j||^2 - 2 x.c_j.
inline void assign_clusters(const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& C,
                            std::vector<int>& assign) {
  if (X.cols() != C.cols()) {
    throw DimensionMismatchError("assign_clusters: dim mismatch");
  }
  const Eigen::Index n = X.rows();
  const Eigen::Index k = C.rows();
  const Eigen::MatrixXd XC = X * C.transpose();          // n x k
  const Eigen::VectorXd c_sq = C.rowwise().squaredNorm();
  assign.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_score = c_sq[0] - 2.0 * XC(i, 0);
    for (Eigen::Index j = 1; j < k; ++j) {
      const double score = c_sq[j] - 2.0 * XC(i, j);
      if (score < best_score) {
        best_score = score;
        best = static_cast<int>(j);
      }
    }
    assign[static_cast<std::size_t>(i)] = best;
  }
}

// k-means++ seeding followed by Lloyd iterations until the assignment
// reaches a fixpoint (or max_iters). Empty clusters are re-seeded with the
// point farthest from its assigned centroid, lowest index first.
inline Codebook fit_codebook(const Eigen::MatrixXd& X, int k,
                             std::uint64_t seed, int max_iters = 100) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (k < 1) throw ValidationError("fit_codebook: k < 1");
  if (n < k) throw TooFewSamplesError("fit_codebook: fewer samples than k");
  if (max_iters < 1) throw ValidationError("fit_codebook: max_iters < 1");

  Rng rng(seed);
  Eigen::MatrixXd C(k, d);
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);

  // k-means++ init.
  const Eigen::VectorXd x_sq = X.rowwise().squaredNorm();
  Eigen::Index first = static_cast<Eigen::Index>(rng.below(n));
  C.row(0) = X.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d2[i] = std::max(0.0, (X.row(i) - C.row(0)).squaredNorm());
  }
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += d2[i];
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double cum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > r) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;  // guard against rounding at the far end
    } else {
      // All remaining mass is zero (duplicated points); take the first
      // index not already chosen.
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = 0;
    }
    C.row(j) = X.row(pick);
    chosen[static_cast<std::size_t>(pick)] = 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dist = std::max(0.0, (X.row(i) - C.row(j)).squaredNorm());
      d2[i] = std::min(d2[i], dist);
    }
  }

  std::vector<int> assign;
  std::vector<int> prev;
  for (int iter = 0; iter < max_iters; ++iter) {
    assign_clusters(X, C, assign);
    if (assign == prev) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += X.row(i);
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        C.row(j) = sums.row(j) /
                   static_cast<double>(counts[static_cast<std::size_t>(j)]);
      }
    }
    // Re-seed empty clusters with the farthest point from its centroid.
    std::vector<char> stolen(static_cast<std::size_t>(n), 0);
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) continue;
      Eigen::Index far = -1;
      double far_dist = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (stolen[static_cast<std::size_t>(i)]) continue;
        const double dist =
            (X.row(i) - C.row(assign[static_cast<std::size_t>(i)]))
                .squaredNorm();
        if (dist > far_dist) {
          far_dist = dist;
          far = i;
        }
      }
      if (far >= 0) {
        C.row(j) = X.row(far);
        stolen[static_cast<std::size_t>(far)] = 1;
      }
    }
    prev = assign;
  }

  Codebook cb;
  cb.centroids = std::move(C);
  return cb;
}

// ---------------------------------------------------------------------------
// VLAD
// ---------------------------------------------------------------------------

// Residual of x against its nearest centroid, written into that centroid's
// block of a k*dim vector; every other block stays zero.
inline Eigen::VectorXd vlad_embed_one(const Eigen::VectorXd& x,
                                      const Codebook& cb) {
  if (x.size() != cb.dim()) {
    throw DimensionMismatchError("vlad_embed_one: dim mismatch");
  }
  int best = 0;
  double best_score = 0.0;
  for (int j = 0; j < cb.k(); ++j) {
    const double score = cb.centroids.row(j).squaredNorm() -
                         2.0 * cb.centroids.row(j).dot(x);
    if (j == 0 || score < best_score) {
      best_score = score;
      best = j;
    }
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(cb.k()) * cb.dim());
  out.segment(static_cast<Eigen::Index>(best) * cb.dim(), cb.dim()) =
      x - cb.centroids.row(best).transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Generalized max pooling
// ---------------------------------------------------------------------------

struct GmpConfig {
  double lambda = 1000.0;
  double tolerance = 1e-10;  // refinement target, relative to ||rhs||
  int max_refinements = 3;
};

// Solves min_xi sum_i (phi_i . xi - 1)^2 + lambda ||xi||^2, i.e.
// (Phi^T Phi + lambda I) xi = Phi^T 1, picking the primal or dual form by
// size. A block whose rows cancel to roundoff pools to zero; otherwise the
// residual must come out below 1e-8 * ||Phi^T 1||.
inline Eigen::VectorXd gmp_pool(const Eigen::MatrixXd& Phi,
                                const GmpConfig& cfg = {}) {
  const Eigen::Index n = Phi.rows();
  const Eigen::Index dim = Phi.cols();
  if (n == 0 || dim == 0) throw EmptyMatrixError("gmp_pool: empty matrix");
  if (cfg.lambda <= 0.0) throw ValidationError("gmp_pool: lambda <= 0");

  const Eigen::VectorXd b = Phi.transpose() * Eigen::VectorXd::Ones(n);
  const double b_norm = b.norm();
  // ||xi|| <= ||b|| / lambda, so a rhs at roundoff scale of Phi is zero to
  // working precision and the relative gate below carries no meaning there.
  // Clusters centered on the mean of their own members hit this exactly.
  if (b_norm <= 1e-12 * Phi.norm()) return Eigen::VectorXd::Zero(dim);

  Eigen::VectorXd xi(dim);
  const auto residual = [&](const Eigen::VectorXd& v) {
    return (Phi.transpose() * (Phi * v) + cfg.lambda * v - b).eval();
  };

  if (dim <= n) {
    Eigen::MatrixXd A = Phi.transpose() * Phi;
    A.diagonal().array() += cfg.lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    xi = ldlt.solve(b);
    for (int r = 0; r < cfg.max_refinements; ++r) {
      const Eigen::VectorXd res = residual(xi);
      if (res.norm() <= cfg.tolerance * b_norm) break;
      xi -= ldlt.solve(res);
    }
  } else {
    // Dual: (Phi Phi^T + lambda I) alpha = 1, xi = Phi^T alpha.
    Eigen::MatrixXd A = Phi * Phi.transpose();
    A.diagonal().array() += cfg.lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd alpha = ldlt.solve(ones);
    xi = Phi.transpose() * alpha;
    for (int r = 0; r < cfg.max_refinements; ++r) {
      const Eigen::VectorXd res = residual(xi);
      if (res.norm() <= cfg.tolerance * b_norm) break;
      // Residuals map back to the dual through Phi (row space).
      const Eigen::VectorXd dual_res =
          (Phi * Phi.transpose() * alpha + cfg.lambda * alpha - ones).eval();
      alpha -= ldlt.solve(dual_res);
      xi = Phi.transpose() * alpha;
    }
  }

  if (residual(xi).norm() > 1e-8 * b_norm) {
    throw NumericalError("gmp_pool: residual above tolerance");
  }
  return xi;
}

}  // namespace typeforge

#endif  // TYPEFORGE_EMBEDDING_HPP_
