#include "test_helpers.hpp"

#include <sstream>

using namespace bayes_lens;
using test::mat;

namespace {

LogLikSamples parse(const std::string& csv, const std::string& meta_json) {
  std::istringstream in(csv);
  return make_samples(read_csv(in), parse_metadata(nlohmann::json::parse(meta_json)));
}

}  // namespace

TEST_CASE("load parses header and chains", "[sample_store]") {
  auto s = parse("a,b\n1,2\n3,4\n5,6\n", R"({"chains":[1,1,2]})");
  CHECK(s.draws() == 3);
  CHECK(s.observations() == 2);
  CHECK(s.obs_ids() == std::vector<std::string>{"a", "b"});
  CHECK(s.values()(2, 1) == 6.0);
  CHECK(s.chain_rows().size() == 2);
}

TEST_CASE("infinite cell is rejected with its location", "[sample_store]") {
  try {
    parse("a,b\n1,2\n3,inf\n", R"({"chains":[0,0]})");
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteValue);
    CHECK(e.detail().find("row 2") != std::string::npos);
    CHECK(e.detail().find("'b'") != std::string::npos);
  }
  REQUIRE_CODE(parse("a,b\n1,2\nnan,4\n", R"({"chains":[0,0]})"), ErrorCode::NonFiniteValue);
}

TEST_CASE("duplicate observation ids", "[sample_store]") {
  REQUIRE_CODE(parse("a,a\n1,2\n3,4\n", R"({"chains":[0,0]})"), ErrorCode::DuplicateObsId);
}

TEST_CASE("malformed rows", "[sample_store]") {
  REQUIRE_CODE(parse("a,b\n1,2\n3\n", R"({"chains":[0,0]})"), ErrorCode::MalformedCsv);
  REQUIRE_CODE(parse("a,b\n1,2\n3,x\n", R"({"chains":[0,0]})"), ErrorCode::MalformedCsv);
  REQUIRE_CODE(parse("a,b\n1,2\n3,4,5\n", R"({"chains":[0,0]})"), ErrorCode::MalformedCsv);
  REQUIRE_CODE(parse("a,b\n1,2\n3,\n", R"({"chains":[0,0]})"), ErrorCode::MalformedCsv);
}

TEST_CASE("chain metadata must match rows", "[sample_store]") {
  REQUIRE_CODE(parse("a,b\n1,2\n3,4\n", R"({"chains":[0,0,0]})"), ErrorCode::ChainMismatch);
  REQUIRE_CODE(load_samples("/nonexistent/loglik.csv", "/nonexistent/meta.json"), ErrorCode::ChainMismatch);
}

TEST_CASE("chain labels and draw count", "[sample_store]") {
  REQUIRE_CODE(test::samples(mat({{1}, {2}, {3}}), {0, -1, 1}), ErrorCode::ChainMismatch);
  REQUIRE_CODE(test::samples(mat({{1}, {2}, {3}}), {0, 0}), ErrorCode::ChainMismatch);
  REQUIRE_CODE(test::samples(mat({{1}})), ErrorCode::DegenerateSample);
}

TEST_CASE("aggregate sums member columns", "[sample_store]") {
  auto s = test::samples(mat({{1, 2}, {3, 4}}));
  auto g = aggregate(s, GroupMap({{"a", "g"}, {"b", "g"}}));
  CHECK(g.values() == mat({{3}, {7}}));
  CHECK(g.obs_ids() == std::vector<std::string>{"g"});

  auto s3 = test::samples(mat({{1, 2, 3}, {4, 5, 6}}));
  auto g3 = aggregate(s3, GroupMap({{"a", "g1"}, {"b", "g1"}, {"c", "g2"}}));
  CHECK(g3.values() == mat({{3, 3}, {9, 6}}));
  CHECK(g3.obs_ids() == std::vector<std::string>{"g1", "g2"});
}

TEST_CASE("identity map leaves values unchanged", "[sample_store]") {
  auto s = test::samples(mat({{1, 2, 3}, {4, 5, 6}, {0.5, -1, 2}}), {0, 0, 0});
  auto g = aggregate(s, GroupMap::identity(s.obs_ids()));
  CHECK(g.values() == s.values());
  CHECK(g.draw_chain() == s.draw_chain());
}

TEST_CASE("group order follows first appearance", "[sample_store]") {
  GroupMap m({{"c", "z"}, {"a", "y"}, {"b", "z"}});
  CHECK(m.groups() == std::vector<std::string>{"z", "y"});
}

TEST_CASE("group map coverage errors", "[sample_store]") {
  using Assignment = std::vector<std::pair<std::string, std::string>>;
  auto s = test::samples(mat({{1, 2}, {3, 4}}));
  REQUIRE_CODE(aggregate(s, GroupMap(Assignment{{"a", "g"}})), ErrorCode::UncoveredObsId);
  REQUIRE_CODE(aggregate(s, GroupMap({{"a", "g"}, {"b", "g"}, {"zz", "g"}})), ErrorCode::UnknownObsId);
  REQUIRE_CODE(GroupMap(Assignment{{"a", "g"}, {"a", "h"}}), ErrorCode::DuplicateObsId);
}

TEST_CASE("single group gives row sums exactly", "[sample_store][property]") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0, 3);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd v(7, 5);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = normal(rng);
    auto s = test::samples(v);
    auto g = aggregate(s, GroupMap::single(s.obs_ids()));
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < v.cols(); ++c) acc += v(r, c);
      CHECK(g.values()(r, 0) == acc);
    }
  }
}

TEST_CASE("aggregate ignores member order within a group", "[sample_store][property]") {
  auto s = test::samples(mat({{1, 2, 4}, {8, 16, 32}}));
  auto a = aggregate(s, GroupMap({{"a", "g"}, {"b", "g"}, {"c", "g"}}));
  auto b = aggregate(s, GroupMap({{"c", "g"}, {"a", "g"}, {"b", "g"}}));
  CHECK(a.values() == b.values());
}

TEST_CASE("write then read round-trips every bit", "[sample_store][property]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  Eigen::MatrixXd v(9, 4);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = u(rng) * std::pow(10.0, (i % 7) - 3);
  v(0, 0) = 1.0 / 3.0;
  v(1, 1) = -0.0;
  v(2, 2) = 5e-320;
  auto s = test::samples(v, {0, 0, 0, 1, 1, 1, 2, 2, 2});
  std::ostringstream out;
  write_samples_csv(out, s);
  auto back = parse(out.str(), metadata_json(s.draw_chain(), std::nullopt).dump());
  for (Eigen::Index i = 0; i < v.size(); ++i) CHECK(back.values().data()[i] == v.data()[i]);
  CHECK(back.draw_chain() == s.draw_chain());
  CHECK(back.obs_ids() == s.obs_ids());
}

TEST_CASE("predictive draws parse per family", "[sample_store]") {
  std::istringstream in("a.mean,a.var,b.mean,b.var\n0,1,2,3\n1,1,2,3\n");
  auto pred = make_predictive(read_csv(in), parse_metadata(nlohmann::json::parse(R"({"chains":[0,1]})")));
  CHECK(pred.family() == Family::Normal);
  CHECK(pred.obs_ids() == std::vector<std::string>{"a", "b"});
  CHECK(pred.tuple(1, 0) == ParamTuple{1, 1});
  CHECK(pred.tuple(0, 1) == ParamTuple{2, 3});

  std::istringstream bin("a.prob\n0.2\n0.3\n");
  auto bp = make_predictive(read_csv(bin),
                            parse_metadata(nlohmann::json::parse(R"({"chains":[0,0],"trials":[5]})")));
  CHECK(bp.family() == Family::Binomial);
  CHECK(bp.tuple(1, 0) == ParamTuple{0.3, 5});

  std::istringstream kv("a.mean,a.var\n0,1\n1,1\n");
  auto known = make_predictive(read_csv(kv), parse_metadata(nlohmann::json::parse(
                                                 R"({"chains":[0,0],"families":["normal_known_var"]})")));
  CHECK(known.family() == Family::NormalKnownVar);
}

TEST_CASE("predictive parameter validation", "[sample_store]") {
  auto meta = parse_metadata(nlohmann::json::parse(R"({"chains":[0,0]})"));
  auto load = [&](const std::string& csv) {
    std::istringstream in(csv);
    return make_predictive(read_csv(in), meta);
  };
  REQUIRE_CODE(load("a.mean,a.var\n0,1\n0,0\n"), ErrorCode::InvalidParameter);
  REQUIRE_CODE(load("a.rate\n1\n-1\n"), ErrorCode::InvalidParameter);
  REQUIRE_CODE(load("a.shape,a.rate\n1,1\n0,1\n"), ErrorCode::InvalidParameter);
  REQUIRE_CODE(load("a.prob\n0.5\n1\n"), ErrorCode::InvalidParameter);
  auto mixed = parse_metadata(nlohmann::json::parse(R"({"chains":[0,0],"families":["normal","poisson"]})"));
  std::istringstream in("a.mean,a.var,b.rate\n0,1,1\n0,1,1\n");
  REQUIRE_CODE(make_predictive(read_csv(in), mixed), ErrorCode::FamilyMismatch);
}

TEST_CASE("predictive draws align with log-likelihoods", "[sample_store]") {
  auto ll = test::samples(mat({{0, 0}, {1, 2}}), {0, 0});
  PredictiveDraws ok(Family::Poisson, {mat({{1, 1}, {2, 2}})}, {}, {0, 0}, {"a", "b"});
  CHECK_NOTHROW(check_aligned(ll, ok));
  PredictiveDraws other(Family::Poisson, {mat({{1, 1}, {2, 2}})}, {}, {0, 0}, {"a", "c"});
  REQUIRE_CODE(check_aligned(ll, other), ErrorCode::UnknownObsId);
  PredictiveDraws longer(Family::Poisson, {mat({{1, 1}, {2, 2}, {3, 3}})}, {}, {0, 0, 0}, {"a", "b"});
  REQUIRE_CODE(check_aligned(ll, longer), ErrorCode::ChainMismatch);
}

TEST_CASE("groups file parsing", "[sample_store]") {
  std::istringstream in("obs_id,group\na,g1\nb,g2\nc,g1\n");
  auto g = read_groups(in);
  CHECK(g.groups() == std::vector<std::string>{"g1", "g2"});
  auto members = g.members({"a", "b", "c"});
  CHECK(members[0] == std::vector<Index>{0, 2});
}
