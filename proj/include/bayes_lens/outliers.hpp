#pragma once

// Outlier matrix Omega = (tr H / tr V) H^{-1/2} V H^{-1/2} with H = diag(h),
// its eigensystem, and the CLOUT family of statistics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "bayes_lens/errors.hpp"
#include "bayes_lens/influence.hpp"
#include "bayes_lens/leverage.hpp"

namespace bayes_lens {

struct Eigensystem {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // orthonormal columns
  int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Stops when the
/// off-diagonal Frobenius norm falls to `tol` times the full norm.
inline Eigensystem jacobi_eigen(Eigen::MatrixXd a, double tol = 1e-12, int max_sweeps = 100) {
  const Index n = a.rows();
  if (a.cols() != n) throw Error(ErrorCode::InvalidArgument, "matrix is not square");
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double norm = a.norm();
  auto off_norm = [&] {
    double s = 0.0;
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (norm > 0 && off_norm() > tol * norm) {
    if (sweep++ >= max_sweeps) {
      throw Error(ErrorCode::SingularSystem, "Jacobi iteration did not converge");
    }
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J' A J on columns p,q then rows p,q.
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  // Sign: largest-magnitude entry positive (first such entry on ties).
  for (Index j = 0; j < n; ++j) {
    Index arg = 0;
    for (Index i = 1; i < n; ++i)
      if (std::abs(v(i, j)) > std::abs(v(arg, j))) arg = i;
    if (v(arg, j) < 0) v.col(j) = -v.col(j);
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
    if (a(x, x) != a(y, y)) return a(x, x) > a(y, y);
    for (Index i = 0; i < n; ++i) {
      if (v(i, x) != v(i, y)) return v(i, x) > v(i, y);
    }
    return false;
  });

  Eigensystem out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    out.values(j) = a(src, src);
    out.vectors.col(j) = v.col(src);
  }
  out.sweeps = sweep;
  return out;
}

struct OutlierDecomposition {
  std::vector<std::string> obs_ids;
  Eigen::MatrixXd omega;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd clout;
};

/// Relative floor below which a hat value counts as zero.
inline constexpr double kZeroHatTolerance = 1e-12;

inline OutlierDecomposition outlier_matrix(const CovMatrix& cov, const Eigen::VectorXd& h) {
  const Index n = cov.V.rows();
  if (h.size() != n) throw Error(ErrorCode::InvalidArgument, "hat values do not match V");
  const double tr_v = cov.trace();
  if (!(tr_v > 0)) throw Error(ErrorCode::ZeroTrace, "tr(V) is zero");
  const double h_max = h.maxCoeff();
  std::string zero;
  for (Index i = 0; i < n; ++i) {
    if (!(h(i) > kZeroHatTolerance * h_max) || !(h(i) > 0)) {
      zero += (zero.empty() ? "" : ", ") + (cov.obs_ids.empty() ? std::to_string(i) : cov.obs_ids[static_cast<std::size_t>(i)]);
    }
  }
  if (!zero.empty()) {
    throw Error(ErrorCode::ZeroHatValue, "zero hat value for observation(s) " + zero +
                                             "; group or exclude them before computing CLOUT");
  }
  const double scale = h.sum() / tr_v;
  const Eigen::ArrayXd inv_root = h.array().rsqrt();
  OutlierDecomposition out;
  out.obs_ids = cov.obs_ids;
  out.omega = scale * (inv_root.matrix().asDiagonal() * cov.V * inv_root.matrix().asDiagonal());
  out.omega = 0.5 * (out.omega + out.omega.transpose()).eval();
  out.clout = out.omega.diagonal();
  auto eig = jacobi_eigen(out.omega);
  out.eigenvalues = std::move(eig.values);
  out.eigenvectors = std::move(eig.vectors);
  return out;
}

inline OutlierDecomposition outlier_matrix(const CovMatrix& cov, const HatValues& hv) {
  return outlier_matrix(cov, hv.h);
}

/// CLOUT(eps) = eps' Omega eps / eps' eps.
inline double clout_direction(const OutlierDecomposition& dec, const Perturbation& eps) {
  if (eps.size() != dec.omega.rows()) {
    throw Error(ErrorCode::InvalidArgument, "perturbation length does not match Omega");
  }
  const auto& e = eps.eps();
  return e.dot(dec.omega * e) / e.squaredNorm();
}

/// sum_{j<=m} lambda_j (eps^j_i)^2 for every observation i.
inline Eigen::VectorXd truncated_clout(const OutlierDecomposition& dec, Index m) {
  const Index n = dec.eigenvalues.size();
  if (m < 1 || m > n) {
    throw Error(ErrorCode::RankOutOfRange, "truncation rank must lie in [1, " + std::to_string(n) + "]");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Index j = 0; j < m; ++j) {
    out += dec.eigenvalues(j) * dec.eigenvectors.col(j).array().square().matrix();
  }
  return out;
}

struct ScreeRow {
  Index rank;
  double eigenvalue;
  double cumulative_share;
};

inline std::vector<ScreeRow> scree(const OutlierDecomposition& dec) {
  const double total = dec.eigenvalues.sum();
  std::vector<ScreeRow> rows;
  double running = 0.0;
  for (Index j = 0; j < dec.eigenvalues.size(); ++j) {
    running += dec.eigenvalues(j);
    rows.push_back({j + 1, dec.eigenvalues(j), running / total});
  }
  return rows;
}

}  // namespace bayes_lens
