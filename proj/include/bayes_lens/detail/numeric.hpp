#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

namespace bayes_lens::detail {

/// Unbiased (S-1) sample variance, two-pass.
template <typename Derived>
double sample_variance(const Eigen::DenseBase<Derived>& x) {
  const Eigen::Index n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mean = x.derived().mean();
  return (x.derived().array() - mean).square().sum() / static_cast<double>(n - 1);
}

/// log(mean(exp(x))) with the max shifted out.
template <typename Derived>
double log_mean_exp(const Eigen::DenseBase<Derived>& x) {
  const double top = x.derived().maxCoeff();
  if (!std::isfinite(top)) return top;
  const double acc = (x.derived().array() - top).exp().sum();
  return top + std::log(acc / static_cast<double>(x.size()));
}

/// Standard error of a pooled estimate from independent replicate
/// estimates (chains or halves): sd(replicates) / sqrt(count).
inline double replicate_mcse(const std::vector<double>& replicates) {
  const auto k = replicates.size();
  if (k < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double v : replicates) mean += v;
  mean /= static_cast<double>(k);
  double ss = 0.0;
  for (double v : replicates) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(k - 1) / static_cast<double>(k));
}

/// Worker count from BAYES_LENS_THREADS (default 1).
inline unsigned thread_cap() {
  if (const char* env = std::getenv("BAYES_LENS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

/// Runs fn(i) for i in [0, count). Each index is written by exactly one
/// worker, so results do not depend on the thread count.
template <typename Fn>
void parallel_for(Eigen::Index count, Fn&& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<Eigen::Index>(thread_cap(), std::max<Eigen::Index>(count, 1)));
  if (workers <= 1) {
    for (Eigen::Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (Eigen::Index i = w; i < count; i += workers) fn(i);
    });
  }
}

/// 17 significant digits, which round-trips every double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace bayes_lens::detail
