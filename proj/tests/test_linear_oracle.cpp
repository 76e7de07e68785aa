#include "test_helpers.hpp"

#include <cmath>
#include <sstream>

using namespace bayes_lens;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

LinearModelSpec intercept_only(double psi = 0.0) {
  LinearModelSpec spec;
  spec.X = Eigen::MatrixXd::Ones(3, 1);
  spec.y = Eigen::Vector3d(0, 0, 3);
  spec.sigma2 = 1.0;
  spec.Psi = Eigen::MatrixXd::Constant(1, 1, psi);
  return spec;
}

// Single-column design whose last row has hat value h and residual r.
LinearModelSpec engineered(double h, double r) {
  LinearModelSpec spec;
  const double a = std::sqrt(9.0 * h / (1.0 - h));
  spec.X = Eigen::MatrixXd::Ones(10, 1);
  spec.X(9, 0) = a;
  spec.y = Eigen::VectorXd::Zero(10);
  spec.y(9) = r / (1.0 - h);
  spec.sigma2 = 1.0;
  spec.Psi = Eigen::MatrixXd::Zero(1, 1);
  return spec;
}

}  // namespace

TEST_CASE("intercept-only example", "[linear_oracle]") {
  auto d = fit(intercept_only());
  for (Index i = 0; i < 3; ++i) CHECK_THAT(d.h(i), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THAT(d.residuals(0), WithinAbs(-1.0, 1e-14));
  CHECK_THAT(d.residuals(2), WithinAbs(2.0, 1e-14));
  CHECK_THAT(d.linf(2), WithinAbs(4.0 / 3.0 + 1.0 / 18.0, 1e-14));
  CHECK_THAT(d.linf(2), WithinAbs(1.38889, 5e-6));
  CHECK_THAT(d.dinf(2), WithinAbs(1.04565, 5e-6));
  CHECK_THAT(d.zinf(2), WithinAbs(2.07213, 5e-6));
  CHECK_THAT(d.cook(2), WithinAbs(3.0, 1e-13));
  CHECK_THAT(d.p_v, WithinAbs(1.0, 1e-14));
  CHECK_THAT(d.p_w, WithinAbs(2.16667, 5e-6));
  CHECK_THAT(d.p_d, WithinAbs(1.0, 1e-14));
  REQUIRE(d.theta_hat);
  CHECK_THAT((*d.theta_hat)(0), WithinAbs(1.0, 1e-14));
}

TEST_CASE("fit agrees with explicit matrix algebra", "[linear_oracle][property]") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 40; ++rep) {
    auto spec = random_spec(rng, 5 + rep % 46, 1 + rep % 5);
    auto d = fit(spec);
    const Eigen::MatrixXd a = spec.sigma2 * spec.Psi + spec.X.transpose() * spec.X;
    const Eigen::MatrixXd ainv = a.inverse();
    const Eigen::MatrixXd hat = spec.X * ainv * spec.X.transpose();
    const Eigen::VectorXd theta = ainv * spec.X.transpose() * spec.y;
    const Eigen::VectorXd r = spec.y - hat * spec.y;
    CHECK((d.hat - hat).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((d.theta_bar - theta).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + theta.cwiseAbs().maxCoeff()));
    CHECK((d.residuals - r).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + r.cwiseAbs().maxCoeff()));
    CHECK(d.hat == d.hat.transpose());
    CHECK((d.h.array() >= 0).all());
    CHECK((d.h.array() <= 1).all());
    CHECK_THAT(d.p_d, WithinRel(hat.trace(), 1e-10));
    CHECK_THAT(d.p_w, WithinRel(d.loglik_cov.trace(), 1e-12));
    CHECK_THAT(d.p_v, WithinRel(2.0 * d.loglik_cov.sum(), 1e-10));
    const Eigen::MatrixXd info = spec.X.transpose() * spec.X / spec.sigma2;
    CHECK(d.sandwich.isApprox(info * (spec.sigma2 * ainv) * info, 1e-9));
  }
}

TEST_CASE("flat prior gives a projection", "[linear_oracle]") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    auto spec = random_spec(rng, 20, 1 + rep % 5);
    spec.Psi.setZero();
    auto d = fit(spec);
    CHECK_THAT(d.hat.trace(), WithinAbs(static_cast<double>(spec.p()), 1e-10));
    CHECK((d.hat * d.hat - d.hat).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("dominant prior shrinks everything to zero", "[linear_oracle]") {
  std::mt19937_64 rng(3);
  auto spec = random_spec(rng, 15, 3);
  spec.Psi = 1e12 * Eigen::MatrixXd::Identity(3, 3);
  auto d = fit(spec);
  CHECK(d.h.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(d.linf.maxCoeff() < 1e-6);
  CHECK(d.dinf.maxCoeff() < 1e-6);
  CHECK(d.p_v < 1e-6);
}

TEST_CASE("sandwich identity", "[linear_oracle]") {
  auto [l0, r0] = sandwich_identity_check(intercept_only());
  CHECK_THAT(l0, WithinAbs(0.0, 1e-12));
  CHECK_THAT(r0, WithinAbs(0.0, 1e-12));
  auto [l1, r1] = sandwich_identity_check(intercept_only(1.0));
  CHECK(l1 > 0);
  CHECK_THAT(l1, WithinRel(r1, 1e-8));
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    auto spec = random_spec(rng, 5 + rep, 1 + rep % 5);
    spec.Psi += 0.5 * Eigen::MatrixXd::Identity(spec.p(), spec.p());
    auto [lhs, rhs] = sandwich_identity_check(spec);
    CHECK_THAT(lhs, WithinRel(rhs, 1e-8));
  }
}

TEST_CASE("sandwich identity needs a full-rank design", "[linear_oracle]") {
  LinearModelSpec spec;
  spec.X = Eigen::MatrixXd::Ones(4, 2);
  spec.y = Eigen::Vector4d(1, 2, 3, 4);
  spec.Psi = Eigen::MatrixXd::Identity(2, 2);
  REQUIRE_CODE(sandwich_identity_check(spec), ErrorCode::SingularSystem);
  spec.Psi.setZero();
  REQUIRE_CODE(fit(spec), ErrorCode::SingularSystem);
}

TEST_CASE("strict ordering of deletion, local and doubling influence", "[linear_oracle][property]") {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    auto d = fit(random_spec(rng, 5 + rep % 46, 1 + rep % 5));
    for (Index i = 0; i < d.h.size(); ++i) {
      if (d.h(i) > 0 && d.h(i) < 1 && d.residuals(i) != 0) {
        CHECK(d.dinf(i) < d.linf(i));
        CHECK(d.linf(i) < d.zinf(i));
        ++checked;
      }
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("deletion influence diverges as leverage approaches one", "[linear_oracle]") {
  const double r = 1.5;
  const double linf_limit = r * r + 0.5, dinf_limit = r * r / 2.0 + 1.0 - std::log(2.0);
  double last_z = 0.0, last_cook = 0.0;
  for (double h : {0.9, 0.99, 0.999}) {
    auto d = fit(engineered(h, r));
    CHECK_THAT(d.h(9), WithinAbs(h, 1e-9));
    CHECK_THAT(d.residuals(9), WithinAbs(r, 1e-8));
    CHECK(d.zinf(9) > last_z);
    CHECK(d.cook(9) > last_cook);
    CHECK(d.linf(9) < linf_limit);
    CHECK(d.dinf(9) < dinf_limit);
    last_z = d.zinf(9);
    last_cook = d.cook(9);
  }
  CHECK(last_z > 5.0);
  CHECK(last_cook > 1000.0);
}

TEST_CASE("unit leverage yields infinite deletion influence", "[linear_oracle]") {
  LinearModelSpec spec;
  spec.X = Eigen::MatrixXd::Identity(3, 3);
  spec.y = Eigen::Vector3d(1, 2, 3);
  spec.Psi = Eigen::MatrixXd::Zero(3, 3);
  auto d = fit(spec);
  CHECK(std::isinf(d.zinf(0)));
  CHECK(std::isinf(d.cook(0)));
  CHECK(std::isfinite(d.linf(0)));
}

TEST_CASE("input validation", "[linear_oracle]") {
  auto spec = intercept_only();
  spec.y(1) = std::nan("");
  REQUIRE_CODE(fit(spec), ErrorCode::NonFiniteInput);
  spec = intercept_only();
  spec.sigma2 = 0.0;
  REQUIRE_CODE(fit(spec), ErrorCode::InvalidArgument);
  spec = intercept_only(-1.0);
  REQUIRE_CODE(fit(spec), ErrorCode::InvalidArgument);
}

TEST_CASE("exact sampler is reproducible and centred", "[linear_oracle]") {
  std::mt19937_64 rng(6);
  auto spec = random_spec(rng, 10, 3);
  auto a = exact_sampler(spec, 20000, 4, 123);
  auto b = exact_sampler(spec, 20000, 4, 123);
  CHECK(a.theta == b.theta);
  CHECK(a.loglik.values() == b.loglik.values());
  std::ostringstream sa, sb;
  write_samples_csv(sa, a.loglik);
  write_samples_csv(sb, b.loglik);
  CHECK(sa.str() == sb.str());

  auto d = fit(spec);
  const Eigen::VectorXd mean = a.theta.colwise().mean();
  for (Index j = 0; j < 3; ++j) {
    CHECK(std::abs(mean(j) - d.theta_bar(j)) <= 3.0 * std::sqrt(d.posterior_cov(j, j) / 20000.0));
  }
  CHECK(a.loglik.chain_rows().size() == 4);
  CHECK(a.pred.family() == Family::NormalKnownVar);
  CHECK_NOTHROW(check_aligned(a.loglik, a.pred));
}

TEST_CASE("sampled influence matches the closed forms", "[linear_oracle]") {
  std::mt19937_64 rng(7);
  auto spec = random_spec(rng, 8, 2);
  auto d = fit(spec);
  auto draws = exact_sampler(spec, 50000, 10, 9);
  auto rep = influence_report(draws.loglik);
  for (Index i = 0; i < 8; ++i) {
    CHECK(std::abs(rep.linf(i) - d.linf(i)) <= 3.5 * rep.linf_mcse(i));
  }
  CHECK(std::abs(rep.p_w - d.p_w) <= 3.5 * rep.p_w_mcse);
  CHECK(std::abs(rep.p_v - d.p_v) <= 3.5 * rep.p_v_mcse);
}

TEST_CASE("planted anomalies", "[linear_oracle]") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    auto spec = plant_anomalies(random_spec(rng, 30, 3), 4, 8.0, 17, 5.0);
    auto d = fit(spec);
    Index top_h, top_ratio;
    d.h.maxCoeff(&top_h);
    (d.linf.array() / d.h.array()).maxCoeff(&top_ratio);
    CHECK(top_h == 17);
    CHECK(top_ratio == 4);
  }
  auto spec = random_spec(rng, 10, 2);
  REQUIRE_CODE(plant_anomalies(spec, 1, 1.0, 2, 5.0), ErrorCode::InvalidArgument);
  REQUIRE_CODE(plant_anomalies(spec, 1, 8.0, 2, 0.0), ErrorCode::InvalidArgument);
  REQUIRE_CODE(plant_anomalies(spec, 10, 8.0, 2, 5.0), ErrorCode::IndexOutOfRange);
  REQUIRE_CODE(plant_anomalies(spec, 1, 8.0, -1, 5.0), ErrorCode::IndexOutOfRange);
}

TEST_CASE("prior mean shift matches the direct posterior", "[linear_oracle]") {
  std::mt19937_64 rng(9);
  auto spec = random_spec(rng, 12, 3);
  spec.Psi = Eigen::Vector3d(2.0, 0.5, 0.0).asDiagonal();
  const Eigen::Vector3d theta0(1.0, -2.0, 0.5);
  auto shifted = fit(shift_prior_mean(spec, theta0));
  const Eigen::MatrixXd a = spec.sigma2 * spec.Psi + spec.X.transpose() * spec.X;
  const Eigen::VectorXd direct = a.ldlt().solve(spec.X.transpose() * spec.y + spec.sigma2 * spec.Psi * theta0);
  CHECK((shifted.theta_bar + theta0 - direct).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((shifted.residuals - (spec.y - spec.X * direct)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("spec JSON round trip", "[linear_oracle]") {
  std::mt19937_64 rng(10);
  auto spec = random_spec(rng, 7, 3);
  auto back = spec_from_json(nlohmann::json::parse(spec_to_json(spec).dump()));
  CHECK(back.X == spec.X);
  CHECK(back.y == spec.y);
  CHECK(back.Psi == spec.Psi);
  CHECK(back.sigma2 == spec.sigma2);

  auto nested = spec_from_json(nlohmann::json::parse(R"({"X":[[1],[1],[1]],"y":[0,0,3],"sigma2":1})"));
  CHECK(nested.Psi.isZero(0.0));
  CHECK_THAT(fit(nested).p_v, WithinAbs(1.0, 1e-14));
  REQUIRE_CODE(spec_from_json(nlohmann::json::parse(R"({"X":[1,1],"y":[0,0,3],"sigma2":1})")),
               ErrorCode::InvalidArgument);
  REQUIRE_CODE(spec_from_json(nlohmann::json::parse(R"({"y":[0],"sigma2":1})")), ErrorCode::InvalidArgument);
}
