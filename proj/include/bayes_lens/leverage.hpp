#pragma once

// Bayesian hat values estimated from two independent posterior draw streams
// as the average KL divergence between replicate predictive distributions.

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bayes_lens/detail/numeric.hpp"
#include "bayes_lens/errors.hpp"
#include "bayes_lens/influence.hpp"
#include "bayes_lens/sample_store.hpp"

namespace bayes_lens {

/// Closed-form KL( p(.|params1) || p(.|params2) ) in nats.
inline double family_kl(Family family, const ParamTuple& p1, const ParamTuple& p2) {
  validate_params(family, p1);
  validate_params(family, p2);
  switch (family) {
    case Family::NormalKnownVar: {
      if (std::abs(p1[1] - p2[1]) > 1e-12 * std::max(p1[1], p2[1])) {
        throw Error(ErrorCode::InvalidParameter, "normal_known_var draws must share one variance");
      }
      const double d = p1[0] - p2[0];
      return d * d / (2.0 * p1[1]);
    }
    case Family::Normal: {
      const double d = p1[0] - p2[0];
      return 0.5 * std::log(p2[1] / p1[1]) + (p1[1] + d * d) / (2.0 * p2[1]) - 0.5;
    }
    case Family::Poisson: {
      const double l1 = p1[0], l2 = p2[0];
      return l1 * std::log(l1 / l2) - l1 + l2;
    }
    case Family::Binomial: {
      if (p1[1] != p2[1]) throw Error(ErrorCode::InvalidParameter, "binomial trial counts differ");
      const double a = p1[0], b = p2[0];
      return p1[1] * (a * std::log(a / b) + (1.0 - a) * std::log((1.0 - a) / (1.0 - b)));
    }
    case Family::Gamma: {
      const double a1 = p1[0], b1 = p1[1], a2 = p2[0], b2 = p2[1];
      return (a1 - a2) * boost::math::digamma(a1) - std::lgamma(a1) + std::lgamma(a2) +
             a2 * std::log(b1 / b2) + a1 * (b2 - b1) / b1;
    }
  }
  return 0.0;
}

/// Log density (or mass) of one replicate outcome.
inline double log_density(Family family, const ParamTuple& p, double y) {
  switch (family) {
    case Family::NormalKnownVar:
    case Family::Normal: {
      const double d = y - p[0];
      return -0.5 * std::log(2.0 * std::numbers::pi * p[1]) - d * d / (2.0 * p[1]);
    }
    case Family::Poisson:
      return y * std::log(p[0]) - p[0] - std::lgamma(y + 1.0);
    case Family::Binomial:
      return std::lgamma(p[1] + 1.0) - std::lgamma(y + 1.0) - std::lgamma(p[1] - y + 1.0) +
             y * std::log(p[0]) + (p[1] - y) * std::log1p(-p[0]);
    case Family::Gamma:
      return p[0] * std::log(p[1]) - std::lgamma(p[0]) + (p[0] - 1.0) * std::log(y) - p[1] * y;
  }
  return 0.0;
}

template <typename Rng>
double sample_replicate(Family family, const ParamTuple& p, Rng& rng) {
  switch (family) {
    case Family::NormalKnownVar:
    case Family::Normal: return std::normal_distribution<double>(p[0], std::sqrt(p[1]))(rng);
    case Family::Poisson:
      return static_cast<double>(std::poisson_distribution<std::int64_t>(p[0])(rng));
    case Family::Binomial:
      return static_cast<double>(
          std::binomial_distribution<std::int64_t>(static_cast<std::int64_t>(p[1]), p[0])(rng));
    case Family::Gamma: return std::gamma_distribution<double>(p[0], 1.0 / p[1])(rng);
  }
  return 0.0;
}

struct McEstimate {
  double value = 0.0;
  double se = 0.0;
};

/// Unbiased KL estimate from replicates y_r ~ p1: mean of log p1(y_r) - log p2(y_r).
inline McEstimate mc_kl(std::span<const double> logp1, std::span<const double> logp2) {
  if (logp1.empty()) throw Error(ErrorCode::NoReplicates, "no replicate draws supplied");
  if (logp1.size() != logp2.size()) {
    throw Error(ErrorCode::InvalidArgument, "replicate log-density vectors differ in length");
  }
  const auto r = static_cast<double>(logp1.size());
  double mean = 0.0;
  for (std::size_t k = 0; k < logp1.size(); ++k) mean += logp1[k] - logp2[k];
  mean /= r;
  double ss = 0.0;
  for (std::size_t k = 0; k < logp1.size(); ++k) {
    const double d = logp1[k] - logp2[k] - mean;
    ss += d * d;
  }
  const double se = logp1.size() > 1 ? std::sqrt(ss / (r - 1.0) / r) : 0.0;
  return {mean, se};
}

/// Draws `replicates` outcomes from p1 and feeds them to mc_kl.
template <typename Rng>
McEstimate mc_family_kl(Family family, const ParamTuple& p1, const ParamTuple& p2, int replicates,
                        Rng& rng) {
  if (replicates < 1) throw Error(ErrorCode::NoReplicates, "replicate count must be >= 1");
  std::vector<double> l1(static_cast<std::size_t>(replicates)), l2(l1.size());
  for (std::size_t k = 0; k < l1.size(); ++k) {
    const double y = sample_replicate(family, p1, rng);
    l1[k] = log_density(family, p1, y);
    l2[k] = log_density(family, p2, y);
  }
  return mc_kl(l1, l2);
}

struct HatOptions {
  std::uint64_t seed = 20240611;
  /// Average KL over both directions instead of KL(stream 1 || stream 2).
  bool symmetrize = false;
  /// Estimate every KL by replicate sampling instead of the closed form.
  bool force_mc = false;
  int replicates = 64;
};

struct HatValues {
  std::vector<std::string> obs_ids;
  Eigen::VectorXd h;
  Eigen::VectorXd mcse;
  Eigen::VectorXd cllev;
  double p_d_star = 0.0;
  double p_d_star_mcse = 0.0;
  /// 1 where a negative Monte Carlo average was floored at zero.
  Eigen::VectorXi floored;
  Index pairs = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<Index> shuffled(std::vector<Index> rows, std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);
  std::shuffle(rows.begin(), rows.end(), rng);
  return rows;
}

inline Eigen::VectorXd share_of_total(const Eigen::VectorXd& v, double total) {
  if (!(total > 0)) return Eigen::VectorXd::Zero(v.size());
  return v / total;
}

}  // namespace detail

/// h_i = E[ KL(p(y_i^r|theta1) || p(y_i^r|theta2)) ] over independent
/// posterior pairs. Stream 1 holds the first half of the chains (by label),
/// stream 2 the rest; a single chain is split into halves.
inline HatValues hat_values(const PredictiveDraws& pred, const HatOptions& options = {}) {
  HatValues out;
  out.obs_ids = pred.obs_ids();
  auto chains = pred.chain_rows();
  std::vector<Index> stream1, stream2;
  if (chains.size() == 1) {
    const auto& all = chains.front();
    const auto half = static_cast<std::ptrdiff_t>(all.size() / 2);
    stream1.assign(all.begin(), all.begin() + half);
    stream2.assign(all.begin() + half, all.end());
    out.warnings.emplace_back(
        "single chain: leverage streams are the two halves of one chain and may not be independent");
  } else {
    const std::size_t split = chains.size() / 2;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      auto& dst = c < split ? stream1 : stream2;
      dst.insert(dst.end(), chains[c].begin(), chains[c].end());
    }
  }
  if (stream1.size() < 2 || stream2.size() < 2) {
    throw Error(ErrorCode::SingleDraw, "each leverage stream needs at least 2 draws");
  }
  stream1 = detail::shuffled(std::move(stream1), options.seed, 1);
  stream2 = detail::shuffled(std::move(stream2), options.seed, 2);
  const Index pairs = static_cast<Index>(std::min(stream1.size(), stream2.size()));
  out.pairs = pairs;

  const Index n = pred.observations();
  const Family family = pred.family();
  out.h.resize(n);
  out.mcse.resize(n);
  out.floored = Eigen::VectorXi::Zero(n);
  Eigen::VectorXd pair_totals = Eigen::VectorXd::Zero(pairs);

  constexpr Index kChunk = 256;
  for (Index first = 0; first < n; first += kChunk) {
    const Index width = std::min(kChunk, n - first);
    Eigen::MatrixXd kl(pairs, width);
    detail::parallel_for(width, [&](Index c) {
      const Index i = first + c;
      std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                        static_cast<std::uint32_t>(options.seed >> 32), 3u,
                        static_cast<std::uint32_t>(i)};
      std::mt19937_64 rng(seq);
      for (Index m = 0; m < pairs; ++m) {
        const auto a = pred.tuple(stream1[static_cast<std::size_t>(m)], i);
        const auto b = pred.tuple(stream2[static_cast<std::size_t>(m)], i);
        auto divergence = [&](const ParamTuple& x, const ParamTuple& y) {
          return options.force_mc ? mc_family_kl(family, x, y, options.replicates, rng).value
                                  : family_kl(family, x, y);
        };
        double v = divergence(a, b);
        if (options.symmetrize) v = 0.5 * (v + divergence(b, a));
        kl(m, c) = v;
      }
    });
    for (Index c = 0; c < width; ++c) {
      const Index i = first + c;
      double mean = kl.col(c).mean();
      if (mean < 0) {
        mean = 0.0;
        out.floored(i) = 1;
      }
      out.h(i) = mean;
      out.mcse(i) = std::sqrt(detail::sample_variance(kl.col(c)) / static_cast<double>(pairs));
      pair_totals += kl.col(c);
    }
  }
  if (out.floored.sum() > 0) {
    out.warnings.push_back(std::to_string(out.floored.sum()) +
                           " Monte Carlo hat value(s) were negative and floored at 0");
  }
  out.p_d_star = detail::ordered_sum(out.h);
  out.p_d_star_mcse = std::sqrt(detail::sample_variance(pair_totals) / static_cast<double>(pairs));
  out.cllev = detail::share_of_total(out.h, out.p_d_star);
  return out;
}

/// Group leverage is the sum of member hat values. Standard errors are
/// combined in quadrature, which ignores cross-observation correlation.
inline HatValues aggregate(const HatValues& hv, const GroupMap& groups) {
  const auto members = groups.members(hv.obs_ids);
  HatValues out;
  out.obs_ids = groups.groups();
  const auto g_count = static_cast<Index>(members.size());
  out.h = Eigen::VectorXd::Zero(g_count);
  out.mcse = Eigen::VectorXd::Zero(g_count);
  out.floored = Eigen::VectorXi::Zero(g_count);
  for (Index g = 0; g < g_count; ++g) {
    for (Index j : members[static_cast<std::size_t>(g)]) {
      out.h(g) += hv.h(j);
      out.mcse(g) += hv.mcse(j) * hv.mcse(j);
      out.floored(g) += hv.floored(j);
    }
    out.mcse(g) = std::sqrt(out.mcse(g));
  }
  out.p_d_star = detail::ordered_sum(out.h);
  out.p_d_star_mcse = hv.p_d_star_mcse;
  out.cllev = detail::share_of_total(out.h, out.p_d_star);
  out.pairs = hv.pairs;
  out.warnings = hv.warnings;
  return out;
}

/// CLLEV(eps) = sum_i h_i eps_i^2 / (sum_i h_i * sum_j eps_j^2).
inline double cllev_direction(const Eigen::VectorXd& h, const Perturbation& eps) {
  if (eps.size() != h.size()) {
    throw Error(ErrorCode::InvalidArgument, "perturbation length does not match hat values");
  }
  const double total = h.sum();
  if (!(total > 0)) throw Error(ErrorCode::ZeroLeverage, "hat values sum to zero");
  const auto& e = eps.eps();
  return (h.array() * e.array().square()).sum() / (total * e.squaredNorm());
}

inline double cllev_direction(const HatValues& hv, const Perturbation& eps) {
  return cllev_direction(hv.h, eps);
}

}  // namespace bayes_lens
