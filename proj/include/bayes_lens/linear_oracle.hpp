#pragma once

// Conjugate normal linear model with known residual variance:
//   y_i ~ N(x_i' theta, sigma2),  theta ~ N(0, Psi^{-1}).
// Closed-form leverage/influence diagnostics plus an exact posterior sampler,
// used as ground truth for the Monte Carlo estimators.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bayes_lens/errors.hpp"
#include "bayes_lens/sample_store.hpp"

namespace bayes_lens {

struct LinearModelSpec {
  Eigen::MatrixXd X;    // n x p
  Eigen::VectorXd y;    // n
  double sigma2 = 1.0;  // known residual variance
  Eigen::MatrixXd Psi;  // p x p prior precision (PSD)

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
};

struct LinearDiagnostics {
  Eigen::MatrixXd hat;
  Eigen::VectorXd h;
  Eigen::VectorXd residuals;
  Eigen::VectorXd theta_bar;
  std::optional<Eigen::VectorXd> theta_hat;
  Eigen::MatrixXd posterior_cov;
  /// Posterior covariance of the log-likelihood contributions.
  Eigen::MatrixXd loglik_cov;
  Eigen::VectorXd linf, dinf, zinf, cook;
  double p_d = 0.0;
  double p_w = 0.0;
  double p_v = 0.0;
  Eigen::MatrixXd sandwich;
};

namespace detail {

inline void validate_spec(const LinearModelSpec& spec) {
  const Index n = spec.n(), p = spec.p();
  if (n < 1 || p < 1) throw Error(ErrorCode::InvalidArgument, "design matrix is empty");
  if (spec.y.size() != n) throw Error(ErrorCode::InvalidArgument, "y length does not match X rows");
  if (spec.Psi.rows() != p || spec.Psi.cols() != p) {
    throw Error(ErrorCode::InvalidArgument, "Psi must be p x p");
  }
  if (!spec.X.allFinite() || !spec.y.allFinite() || !spec.Psi.allFinite() ||
      !std::isfinite(spec.sigma2)) {
    throw Error(ErrorCode::NonFiniteInput, "model specification contains non-finite values");
  }
  if (!(spec.sigma2 > 0)) throw Error(ErrorCode::InvalidArgument, "sigma2 must be > 0");
  const double scale = std::max(1.0, spec.Psi.cwiseAbs().maxCoeff());
  if ((spec.Psi - spec.Psi.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::InvalidArgument, "Psi must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spec.Psi, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw Error(ErrorCode::InvalidArgument, "Psi must be positive semidefinite");
  }
}

/// Cholesky of sigma2 * Psi + X'X.
inline Eigen::LLT<Eigen::MatrixXd> posterior_system(const LinearModelSpec& spec) {
  validate_spec(spec);
  const Eigen::MatrixXd a = spec.sigma2 * spec.Psi + spec.X.transpose() * spec.X;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "sigma2*Psi + X'X is not positive definite");
  }
  return llt;
}

}  // namespace detail

inline LinearDiagnostics fit(const LinearModelSpec& spec) {
  const auto llt = detail::posterior_system(spec);
  const Index n = spec.n(), p = spec.p();
  const double s2 = spec.sigma2;
  const Eigen::MatrixXd xt = spec.X.transpose();

  LinearDiagnostics d;
  d.hat = spec.X * llt.solve(xt);
  d.hat = 0.5 * (d.hat + d.hat.transpose()).eval();
  d.h = d.hat.diagonal();
  d.theta_bar = llt.solve(xt * spec.y);
  d.residuals = spec.y - spec.X * d.theta_bar;
  d.posterior_cov = s2 * llt.solve(Eigen::MatrixXd::Identity(p, p));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(spec.X);
  if (qr.rank() == p) d.theta_hat = qr.solve(spec.y);

  d.p_d = d.h.sum();
  const double k = d.p_d;
  constexpr double inf = std::numeric_limits<double>::infinity();
  d.linf.resize(n);
  d.dinf.resize(n);
  d.zinf.resize(n);
  d.cook.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double h = d.h(i);
    const double r2 = d.residuals(i) * d.residuals(i);
    d.linf(i) = r2 * h / s2 + h * h / 2.0;
    d.dinf(i) = r2 * h / (s2 * (1.0 + h)) + h - std::log1p(h);
    if (h < 1.0) {
      d.zinf(i) = r2 * h / (s2 * (1.0 - h)) - h - std::log1p(-h);
      d.cook(i) = r2 * h / (k * s2 * (1.0 - h) * (1.0 - h));
    } else {
      d.zinf(i) = inf;
      d.cook(i) = inf;
    }
  }
  d.loglik_cov = (d.residuals * d.residuals.transpose()).cwiseProduct(d.hat) / s2 +
                 0.5 * d.hat.cwiseProduct(d.hat);
  d.p_w = d.linf.sum();
  d.p_v = 2.0 * (d.residuals.dot(d.hat * d.residuals) / s2 + (d.hat * d.hat).trace() / 2.0);
  const Eigen::MatrixXd info = spec.X.transpose() * spec.X / s2;
  d.sandwich = info * d.posterior_cov * info;
  return d;
}

/// Both sides of 2 r'Hr / sigma2 = 2 (theta_hat - theta_bar)' S (theta_hat - theta_bar).
inline std::pair<double, double> sandwich_identity_check(const LinearModelSpec& spec) {
  const auto d = fit(spec);
  if (!d.theta_hat) throw Error(ErrorCode::SingularSystem, "X'X is singular; no maximum likelihood estimate");
  const double lhs = 2.0 * d.residuals.dot(d.hat * d.residuals) / spec.sigma2;
  const Eigen::VectorXd diff = *d.theta_hat - d.theta_bar;
  const double rhs = 2.0 * diff.dot(d.sandwich * diff);
  return {lhs, rhs};
}

struct ExactDraws {
  LogLikSamples loglik;
  PredictiveDraws pred;
  Eigen::MatrixXd theta;  // S x p
};

inline std::vector<std::string> default_obs_ids(Index n) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ids.push_back("y" + std::to_string(i + 1));
  return ids;
}

/// Independent draws from N(theta_bar, sigma2 (sigma2 Psi + X'X)^{-1}).
/// Chain c occupies a contiguous block of rows and uses its own stream
/// seeded by (seed, c).
inline ExactDraws exact_sampler(const LinearModelSpec& spec, Index draws, Index chains,
                                std::uint64_t seed) {
  if (draws < 2) throw Error(ErrorCode::DegenerateSample, "at least 2 draws are required");
  if (chains < 1 || draws / chains < 2) {
    throw Error(ErrorCode::InvalidArgument, "every chain needs at least 2 draws");
  }
  const auto d = fit(spec);
  const Index n = spec.n(), p = spec.p();
  Eigen::LLT<Eigen::MatrixXd> cov_llt(d.posterior_cov);
  if (cov_llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "posterior covariance is not positive definite");
  }
  const Eigen::MatrixXd chol = cov_llt.matrixL();

  Eigen::MatrixXd z(p, draws);
  std::vector<int> labels(static_cast<std::size_t>(draws));
  Index row = 0;
  for (Index c = 0; c < chains; ++c) {
    const Index len = draws / chains + (c < draws % chains ? 1 : 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(c)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    for (Index s = 0; s < len; ++s, ++row) {
      labels[static_cast<std::size_t>(row)] = static_cast<int>(c);
      for (Index j = 0; j < p; ++j) z(j, row) = normal(rng);
    }
  }
  Eigen::MatrixXd theta = (chol * z).colwise() + d.theta_bar;  // p x S
  Eigen::MatrixXd mu = (spec.X * theta).transpose();           // S x n

  const double s2 = spec.sigma2;
  const double norm_const = -0.5 * std::log(2.0 * std::numbers::pi * s2);
  Eigen::MatrixXd ll = ((-mu).rowwise() + spec.y.transpose()).array().square().matrix();
  ll = (norm_const - ll.array() / (2.0 * s2)).matrix();

  auto ids = default_obs_ids(n);
  LogLikSamples loglik(std::move(ll), labels, ids);
  std::vector<Eigen::MatrixXd> params{mu, Eigen::MatrixXd::Constant(draws, n, s2)};
  PredictiveDraws pred(Family::NormalKnownVar, std::move(params), Eigen::VectorXd(), labels, ids);
  return {std::move(loglik), std::move(pred), theta.transpose()};
}

/// Moves the response of `outlier_idx` `outlier_scale` residual sd off its
/// fitted value, then moves row `leverage_idx` `leverage_shift` sd out along
/// the first non-constant column and places its response on the line fitted
/// without it.
inline LinearModelSpec plant_anomalies(LinearModelSpec spec, Index outlier_idx, double outlier_scale,
                                       Index leverage_idx, double leverage_shift) {
  const Index n = spec.n(), p = spec.p();
  if (outlier_idx < 0 || outlier_idx >= n || leverage_idx < 0 || leverage_idx >= n) {
    throw Error(ErrorCode::IndexOutOfRange, "anomaly index outside [0, n)");
  }
  if (outlier_idx == leverage_idx) {
    throw Error(ErrorCode::InvalidArgument, "outlier and leverage rows must differ");
  }
  if (!(outlier_scale > 1.0)) throw Error(ErrorCode::InvalidArgument, "outlier scale must exceed 1");
  if (leverage_shift == 0.0 || !std::isfinite(leverage_shift)) {
    throw Error(ErrorCode::InvalidArgument, "leverage shift must be non-zero");
  }

  const auto base = fit(spec);
  const double sd = std::sqrt(spec.sigma2);
  const double fitted = spec.y(outlier_idx) - base.residuals(outlier_idx);
  const double sign = base.residuals(outlier_idx) < 0 ? -1.0 : 1.0;
  spec.y(outlier_idx) = fitted + sign * outlier_scale * sd;

  Index column = -1;
  for (Index j = 0; j < p && column < 0; ++j) {
    if (spec.X.col(j).maxCoeff() > spec.X.col(j).minCoeff()) column = j;
  }
  if (column < 0) throw Error(ErrorCode::InvalidArgument, "design has no non-constant column");
  const double mean = spec.X.col(column).mean();
  const double col_sd = std::sqrt((spec.X.col(column).array() - mean).square().sum() /
                                  static_cast<double>(n - 1));
  spec.X(leverage_idx, column) = mean + leverage_shift * col_sd;

  LinearModelSpec rest;
  rest.sigma2 = spec.sigma2;
  rest.Psi = spec.Psi;
  rest.X.resize(n - 1, p);
  rest.y.resize(n - 1);
  for (Index i = 0, k = 0; i < n; ++i) {
    if (i == leverage_idx) continue;
    rest.X.row(k) = spec.X.row(i);
    rest.y(k++) = spec.y(i);
  }
  spec.y(leverage_idx) = spec.X.row(leverage_idx).dot(fit(rest).theta_bar);
  return spec;
}

/// Equivalent spec for a prior mean theta0: y - X theta0 with a centred prior.
inline LinearModelSpec shift_prior_mean(LinearModelSpec spec, const Eigen::VectorXd& theta0) {
  if (theta0.size() != spec.p()) throw Error(ErrorCode::InvalidArgument, "prior mean has wrong length");
  spec.y -= spec.X * theta0;
  return spec;
}

/// Random spec: X, coefficients and noise i.i.d. standard normal draws,
/// sigma2 in [0.5, 2], diagonal Psi in [0, 2). Designs with
/// cond(X'X) > 1e6 are redrawn.
template <typename Rng>
LinearModelSpec random_spec(Rng& rng, Index n, Index p) {
  if (n < p || p < 1) throw Error(ErrorCode::InvalidArgument, "random spec needs n >= p >= 1");
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  LinearModelSpec spec;
  for (int attempt = 0;; ++attempt) {
    spec.X.resize(n, p);
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < n; ++i) spec.X(i, j) = normal(rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spec.X.transpose() * spec.X,
                                                       Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (lo > 0 && hi / lo <= 1e6) break;
    if (attempt > 1000) throw Error(ErrorCode::SingularSystem, "could not draw a well-conditioned design");
  }
  spec.sigma2 = 0.5 + 1.5 * unit(rng);
  Eigen::VectorXd beta(p);
  for (Index j = 0; j < p; ++j) beta(j) = normal(rng);
  spec.y = spec.X * beta;
  for (Index i = 0; i < n; ++i) spec.y(i) += std::sqrt(spec.sigma2) * normal(rng);
  spec.Psi = Eigen::MatrixXd::Zero(p, p);
  for (Index j = 0; j < p; ++j) spec.Psi(j, j) = 2.0 * unit(rng);
  return spec;
}

// JSON: {"X": row-major n*p array or array of rows, "y", "sigma2", "Psi"}.

namespace detail {

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Index rows, Index cols,
                                        const char* name) {
  Eigen::MatrixXd m(rows, cols);
  if (!j.is_array()) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be an array");
  if (!j.empty() && j.front().is_array()) {
    if (static_cast<Index>(j.size()) != rows) {
      throw Error(ErrorCode::InvalidArgument, std::string(name) + " has the wrong number of rows");
    }
    for (Index i = 0; i < rows; ++i) {
      const auto& r = j[static_cast<std::size_t>(i)];
      if (static_cast<Index>(r.size()) != cols) {
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " row has the wrong length");
      }
      for (Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)].get<double>();
    }
  } else {
    if (static_cast<Index>(j.size()) != rows * cols) {
      throw Error(ErrorCode::InvalidArgument, std::string(name) + " has the wrong number of entries");
    }
    for (Index i = 0; i < rows; ++i)
      for (Index c = 0; c < cols; ++c) m(i, c) = j[static_cast<std::size_t>(i * cols + c)].get<double>();
  }
  return m;
}

inline std::vector<double> row_major(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index c = 0; c < m.cols(); ++c) out.push_back(m(i, c));
  return out;
}

}  // namespace detail

inline LinearModelSpec spec_from_json(const nlohmann::json& j) {
  try {
    LinearModelSpec spec;
    const auto y = j.at("y").get<std::vector<double>>();
    const Index n = static_cast<Index>(y.size());
    spec.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    const auto& xj = j.at("X");
    Index p = 0;
    if (!xj.empty() && xj.front().is_array()) p = static_cast<Index>(xj.front().size());
    else if (n > 0) p = static_cast<Index>(xj.size()) / n;
    spec.X = detail::matrix_from_json(xj, n, p, "X");
    spec.sigma2 = j.at("sigma2").get<double>();
    spec.Psi = j.contains("Psi") ? detail::matrix_from_json(j.at("Psi"), p, p, "Psi")
                                 : Eigen::MatrixXd::Zero(p, p);
    detail::validate_spec(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("model spec JSON: ") + e.what());
  }
}

inline nlohmann::json spec_to_json(const LinearModelSpec& spec) {
  nlohmann::json j;
  j["n"] = spec.n();
  j["p"] = spec.p();
  j["X"] = detail::row_major(spec.X);
  j["y"] = std::vector<double>(spec.y.begin(), spec.y.end());
  j["sigma2"] = spec.sigma2;
  j["Psi"] = detail::row_major(spec.Psi);
  return j;
}

}  // namespace bayes_lens
