#pragma once

#include <catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "bayes_lens/bayes_lens.hpp"

namespace test {

inline Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(1, static_cast<char>('a' + i)));
  return out;
}

inline bayes_lens::LogLikSamples samples(const Eigen::MatrixXd& values, std::vector<int> chains = {}) {
  if (chains.empty()) chains.assign(static_cast<std::size_t>(values.rows()), 0);
  return {values, std::move(chains), ids(static_cast<std::size_t>(values.cols()))};
}

inline bayes_lens::LogLikSamples toy() { return samples(mat({{0, 0}, {1, 2}, {2, 4}})); }

inline Eigen::MatrixXd random_orthonormal(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

#define REQUIRE_CODE(expr, expected)                                              \
  do {                                                                            \
    bool thrown_ = false;                                                         \
    try {                                                                         \
      (void)(expr);                                                               \
    } catch (const bayes_lens::Error& e_) {                                       \
      thrown_ = true;                                                             \
      CHECK(std::string(bayes_lens::to_string(e_.code())) ==                      \
            std::string(bayes_lens::to_string(expected)));                        \
    }                                                                             \
    CHECK(thrown_);                                                               \
  } while (0)

}  // namespace test
