#pragma once

// Influence diagnostics from the posterior covariance of log-likelihood
// contributions: LINF, DINF, conformal influence, the WAIC-type penalties,
// and prior-data / cross conflict ratios.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bayes_lens/detail/numeric.hpp"
#include "bayes_lens/errors.hpp"
#include "bayes_lens/sample_store.hpp"

namespace bayes_lens {

/// Posterior covariance V of the log-likelihood contributions (nats^2).
struct CovMatrix {
  Eigen::MatrixXd V;
  std::vector<std::string> obs_ids;

  double trace() const { return V.trace(); }
};

/// Direction of a multivariate case-weight perturbation, w = 1 + eps.
class Perturbation {
 public:
  explicit Perturbation(Eigen::VectorXd eps) : eps_(std::move(eps)) {
    if (eps_.size() == 0 || eps_.squaredNorm() == 0.0) {
      throw Error(ErrorCode::ZeroPerturbation, "perturbation direction is all zero");
    }
  }

  static Perturbation basis(Index n, Index i) {
    if (i < 0 || i >= n) throw Error(ErrorCode::IndexOutOfRange, "basis index out of range");
    return Perturbation(Eigen::VectorXd::Unit(n, i));
  }
  static Perturbation ones(Index n) { return Perturbation(Eigen::VectorXd::Ones(n)); }

  const Eigen::VectorXd& eps() const noexcept { return eps_; }
  Index size() const noexcept { return eps_.size(); }

 private:
  Eigen::VectorXd eps_;
};

namespace detail {

inline void require_draws(const Eigen::MatrixXd& values) {
  if (values.rows() < 2) throw Error(ErrorCode::DegenerateSample, "at least 2 draws are required");
}

/// Unbiased covariance of the columns. Rows are accumulated in fixed-size
/// blocks in order so the result is reproducible.
inline Eigen::MatrixXd column_covariance(const Eigen::MatrixXd& values) {
  require_draws(values);
  constexpr Index kBlock = 4096;
  const Index s = values.rows();
  const Eigen::RowVectorXd mean = values.colwise().mean();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(values.cols(), values.cols());
  for (Index start = 0; start < s; start += kBlock) {
    const Index len = std::min(kBlock, s - start);
    const Eigen::MatrixXd centered = values.middleRows(start, len).rowwise() - mean;
    acc.noalias() += centered.transpose() * centered;
  }
  acc /= static_cast<double>(s - 1);
  return 0.5 * (acc + acc.transpose());
}

inline Eigen::VectorXd column_variances(const Eigen::MatrixXd& values) {
  require_draws(values);
  Eigen::VectorXd out(values.cols());
  for (Index j = 0; j < values.cols(); ++j) out(j) = sample_variance(values.col(j));
  return out;
}

inline double doubling_influence(const Eigen::Ref<const Eigen::VectorXd>& column) {
  const double top = column.maxCoeff();
  const Eigen::ArrayXd shifted = column.array() - top;
  const double lme = std::log(shifted.exp().sum() / static_cast<double>(column.size()));
  const double gap = 2.0 * (lme - shifted.mean());
  if (!std::isfinite(gap)) throw Error(ErrorCode::OverflowGuard, "log-mean-exp is not finite");
  return std::max(gap, 0.0);
}

inline Eigen::VectorXd column_dinf(const Eigen::MatrixXd& values) {
  require_draws(values);
  Eigen::VectorXd out(values.cols());
  parallel_for(values.cols(), [&](Index j) { out(j) = doubling_influence(values.col(j)); });
  return out;
}

inline double total_variance_penalty(const Eigen::MatrixXd& values) {
  require_draws(values);
  Eigen::VectorXd totals = Eigen::VectorXd::Zero(values.rows());
  for (Index j = 0; j < values.cols(); ++j) totals += values.col(j);
  return 2.0 * sample_variance(totals);
}

inline double ordered_sum(const Eigen::VectorXd& v) {
  double s = 0.0;
  for (Index i = 0; i < v.size(); ++i) s += v(i);
  return s;
}

}  // namespace detail

inline CovMatrix loglik_covariance(const LogLikSamples& samples) {
  return {detail::column_covariance(samples.values()), samples.obs_ids()};
}

/// LINF_i: posterior variance of observation i's log-likelihood.
inline Eigen::VectorXd linf(const LogLikSamples& samples) {
  return detail::column_variances(samples.values());
}

/// DINF_i = 2 (log E[p(y_i|theta)] - E[log p(y_i|theta)]).
inline Eigen::VectorXd dinf(const LogLikSamples& samples) {
  return detail::column_dinf(samples.values());
}

/// p_V = 2 Var(sum_i log p(y_i|theta)).
inline double p_v(const LogLikSamples& samples) {
  return detail::total_variance_penalty(samples.values());
}

/// CLINF(eps) = eps' V eps / (tr(V) eps' eps).
inline double clinf_direction(const CovMatrix& cov, const Perturbation& eps) {
  if (eps.size() != cov.V.rows()) {
    throw Error(ErrorCode::InvalidArgument, "perturbation length does not match V");
  }
  const double tr = cov.trace();
  if (!(tr > 0)) throw Error(ErrorCode::ZeroTrace, "tr(V) is zero; all log-likelihoods are constant");
  const auto& e = eps.eps();
  return e.dot(cov.V * e) / (tr * e.squaredNorm());
}

/// p_V / p_W.
inline double conflict_ratio(const LogLikSamples& samples) {
  const double pw = detail::ordered_sum(linf(samples));
  if (!(pw > 0)) throw Error(ErrorCode::ZeroTrace, "p_W is zero");
  return p_v(samples) / pw;
}

struct CrossConflictOptions {
  /// Keep the factor 2 of the global p_V in the per-group p_V.
  bool pv_group_factor = true;
};

struct GroupConflict {
  std::string group;
  double p_v = 0.0;
  double p_w = 0.0;
  std::optional<double> ratio;
  std::optional<ErrorCode> error;
};

/// Per group g: p_Vg / p_Wg with p_Vg from one common perturbation of the
/// group and p_Wg from perturbing its members individually.
inline std::vector<GroupConflict> cross_conflict(const LogLikSamples& samples, const GroupMap& groups,
                                                 const CrossConflictOptions& options = {}) {
  const auto members = groups.members(samples.obs_ids());
  const Eigen::VectorXd var = linf(samples);
  const double factor = options.pv_group_factor ? 2.0 : 1.0;
  std::vector<GroupConflict> out;
  out.reserve(members.size());
  for (std::size_t g = 0; g < members.size(); ++g) {
    GroupConflict gc;
    gc.group = groups.groups()[g];
    Eigen::VectorXd total = Eigen::VectorXd::Zero(samples.draws());
    for (Index j : members[g]) {
      total += samples.values().col(j);
      gc.p_w += var(j);
    }
    gc.p_v = factor * detail::sample_variance(total);
    if (gc.p_w > 0) gc.ratio = gc.p_v / gc.p_w;
    else gc.error = ErrorCode::ZeroTrace;
    out.push_back(std::move(gc));
  }
  return out;
}

enum class BinomialVariant { Binomial, Bernoulli };

/// p_W contributions of binomial observations, either treating each count as
/// one unit or as m_i individually perturbable Bernoulli trials.
inline Eigen::VectorXd binomial_pw(const Eigen::VectorXd& y, const Eigen::VectorXd& m,
                                   const Eigen::MatrixXd& pi_draws, BinomialVariant variant) {
  const Index n = y.size();
  if (m.size() != n || pi_draws.cols() != n) {
    throw Error(ErrorCode::InvalidArgument, "y, m and probability draws disagree in length");
  }
  detail::require_draws(pi_draws);
  for (Index i = 0; i < n; ++i) {
    if (!(y(i) >= 0 && y(i) <= m(i) && m(i) >= 1)) {
      throw Error(ErrorCode::CountOutOfRange, "observation " + std::to_string(i + 1) +
                                                  " needs 0 <= y <= m and m >= 1");
    }
  }
  if (!((pi_draws.array() > 0).all() && (pi_draws.array() < 1).all())) {
    throw Error(ErrorCode::ProbabilityOutOfRange, "probability draws must lie in (0,1)");
  }
  Eigen::VectorXd out(n);
  for (Index i = 0; i < n; ++i) {
    const Eigen::ArrayXd log_p = pi_draws.col(i).array().log();
    const Eigen::ArrayXd log_q = (1.0 - pi_draws.col(i).array()).log();
    if (variant == BinomialVariant::Binomial) {
      const Eigen::ArrayXd contrib = y(i) * log_p + (m(i) - y(i)) * log_q;
      out(i) = detail::sample_variance(contrib.matrix());
    } else {
      out(i) = y(i) * detail::sample_variance(log_p.matrix()) +
               (m(i) - y(i)) * detail::sample_variance(log_q.matrix());
    }
  }
  return out;
}

struct InfluenceOptions {
  double conflict_threshold = 3.0;
};

struct InfluenceReport {
  std::vector<std::string> obs_ids;
  Eigen::VectorXd linf, dinf, clinf;
  Eigen::VectorXd linf_mcse, dinf_mcse, clinf_mcse;
  double p_w = 0.0, p_w_star = 0.0, p_v = 0.0, conflict_ratio = 0.0;
  double p_w_mcse = 0.0, p_w_star_mcse = 0.0, p_v_mcse = 0.0, conflict_ratio_mcse = 0.0;
  double conflict_threshold = 3.0;
  bool conflict_flag = false;
  Index draws = 0;
  Index replicates = 0;
};

namespace detail {

struct InfluencePoint {
  Eigen::VectorXd linf, dinf, clinf;
  double p_w, p_w_star, p_v;
};

inline InfluencePoint influence_point(const Eigen::MatrixXd& values) {
  InfluencePoint pt;
  pt.linf = column_variances(values);
  pt.dinf = column_dinf(values);
  pt.p_w = ordered_sum(pt.linf);
  pt.p_w_star = ordered_sum(pt.dinf);
  pt.p_v = total_variance_penalty(values);
  pt.clinf = pt.p_w > 0 ? Eigen::VectorXd(pt.linf / pt.p_w) : Eigen::VectorXd::Zero(pt.linf.size());
  return pt;
}

}  // namespace detail

/// Point estimates pool all chains; standard errors come from the spread of
/// the same statistics across chains (or the two halves of one chain).
inline InfluenceReport influence_report(const LogLikSamples& samples,
                                        const InfluenceOptions& options = {}) {
  const auto pooled = detail::influence_point(samples.values());
  if (!(pooled.p_w > 0)) throw Error(ErrorCode::ZeroTrace, "p_W is zero; all log-likelihoods are constant");

  InfluenceReport r;
  r.obs_ids = samples.obs_ids();
  r.linf = pooled.linf;
  r.dinf = pooled.dinf;
  r.clinf = pooled.clinf;
  r.p_w = pooled.p_w;
  r.p_w_star = pooled.p_w_star;
  r.p_v = pooled.p_v;
  r.conflict_ratio = pooled.p_v / pooled.p_w;
  r.conflict_threshold = options.conflict_threshold;
  r.conflict_flag = r.conflict_ratio >= options.conflict_threshold;
  r.draws = samples.draws();

  const auto blocks = samples.replicate_rows();
  r.replicates = static_cast<Index>(blocks.size());
  const Index n = samples.observations();
  std::vector<detail::InfluencePoint> reps;
  for (const auto& rows : blocks) {
    if (rows.size() < 2) continue;
    reps.push_back(detail::influence_point(samples.values()(rows, Eigen::all)));
  }
  auto mcse_of = [&](auto getter) {
    std::vector<double> v;
    v.reserve(reps.size());
    for (const auto& p : reps) v.push_back(getter(p));
    return detail::replicate_mcse(v);
  };
  r.linf_mcse.resize(n);
  r.dinf_mcse.resize(n);
  r.clinf_mcse.resize(n);
  for (Index i = 0; i < n; ++i) {
    r.linf_mcse(i) = mcse_of([i](const auto& p) { return p.linf(i); });
    r.dinf_mcse(i) = mcse_of([i](const auto& p) { return p.dinf(i); });
    r.clinf_mcse(i) = mcse_of([i](const auto& p) { return p.clinf(i); });
  }
  r.p_w_mcse = mcse_of([](const auto& p) { return p.p_w; });
  r.p_w_star_mcse = mcse_of([](const auto& p) { return p.p_w_star; });
  r.p_v_mcse = mcse_of([](const auto& p) { return p.p_v; });
  r.conflict_ratio_mcse = mcse_of([](const auto& p) { return p.p_w > 0 ? p.p_v / p.p_w : 0.0; });
  return r;
}

}  // namespace bayes_lens
