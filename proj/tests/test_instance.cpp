#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "qpsoc/instance.hpp"

using namespace qpsoc;

TEST_CASE("parse_instance maps fields directly") {
  auto qp = parse_instance(R"({"n":3,"q":[[0,0,1.0],[1,2,-2.0]],"c":[0,0,0]})");
  CHECK(qp.n == 3);
  CHECK(qp.q_diag == std::map<int, double>{{0, 1.0}});
  CHECK(qp.q_off == std::map<std::pair<int, int>, double>{{{1, 2}, -2.0}});
  CHECK(qp.c == std::vector<double>{0, 0, 0});
}

TEST_CASE("parse_instance drops zero coefficients") {
  auto qp = parse_instance(R"({"n":2,"q":[[0,1,0.0]],"c":[1,-1]})");
  CHECK(qp.q_off.empty());
  CHECK(qp.q_diag.empty());
  CHECK(qp.c == std::vector<double>{1, -1});
}

TEST_CASE("parse_instance rejects bad input") {
  CHECK_THROWS_AS(parse_instance(R"({"n":2,"q":[[0,3,1.0]],"c":[0,0]})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_instance("{not json"), std::invalid_argument);
  CHECK_THROWS_AS(parse_instance(R"({"n":2,"c":[0]})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_instance(R"({"n":0,"c":[]})"), std::invalid_argument);
  // duplicate pair, same and differing values, including reversed order
  CHECK_THROWS_AS(parse_instance(R"({"n":2,"q":[[0,1,1.0],[0,1,1.0]],"c":[0,0]})"),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_instance(R"({"n":2,"q":[[0,1,1.0],[1,0,2.0]],"c":[0,0]})"),
                       doctest::Contains("different values"), std::invalid_argument);
  CHECK_THROWS_AS(parse_instance(R"({"n":2,"q":[[0,0,1.0],[0,0,1.0]],"c":[0,0]})"),
                  std::invalid_argument);
}

TEST_CASE("build_graph derives loops and edges from signs") {
  SUBCASE("three-cycle with one plus loop") {
    auto qp = parse_instance(R"({"n":3,"q":[[0,0,1.0],[0,1,-1.0],[0,2,2.0],[1,2,1.0]],"c":[0,0,0]})");
    auto g = build_graph(qp);
    CHECK(g.node_count == 3);
    CHECK(g.edges == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}});
    CHECK(g.plus_nodes() == std::vector<int>{0});
    CHECK(g.minus_nodes().empty());
  }
  SUBCASE("empty instance gives edgeless loopless graph") {
    auto qp = parse_instance(R"({"n":4,"q":[],"c":[0,0,0,0]})");
    auto g = build_graph(qp);
    CHECK(g.edges.empty());
    CHECK(g.plus_nodes().empty());
    CHECK(g.minus_nodes().empty());
  }
  SUBCASE("sign rule") {
    auto qp = parse_instance(R"({"n":2,"q":[[0,0,-1.0],[1,1,2.0],[0,1,1.0]],"c":[0,0]})");
    auto g = build_graph(qp);
    CHECK(g.minus_nodes() == std::vector<int>{0});
    CHECK(g.plus_nodes() == std::vector<int>{1});
    CHECK(g.edges == std::vector<std::pair<int, int>>{{0, 1}});
  }
}

TEST_CASE("neighborhood includes self exactly when a loop is present") {
  auto qp = parse_instance(R"({"n":3,"q":[[0,0,1.0],[0,1,-1.0],[0,2,2.0],[1,2,1.0]],"c":[0,0,0]})");
  auto g = build_graph(qp);
  CHECK(neighborhood(g, 0) == std::vector<int>{0, 1, 2});  // loop at 0: N(0) = V
  CHECK(neighborhood(g, 1) == std::vector<int>{0, 2});
  CHECK_THROWS_AS(neighborhood(g, 3), std::out_of_range);
  CHECK_THROWS_AS(neighborhood(g, -1), std::out_of_range);

  auto iso = parse_instance(R"({"n":1,"q":[[0,0,1.0]],"c":[0]})");
  auto gi = build_graph(iso);
  CHECK(neighborhood(gi, 0) == std::vector<int>{0});

  auto noloop = parse_instance(R"({"n":6,"q":[[0,2,1.0],[0,5,1.0]],"c":[0,0,0,0,0,0]})");
  auto gn = build_graph(noloop);
  CHECK(neighborhood(gn, 0) == std::vector<int>{2, 5});
}

TEST_CASE("edge set is in bijection with off-diagonal entries") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    SparseQp qp;
    qp.n = 8;
    qp.c.assign(8, 0.0);
    for (int i = 0; i < 8; ++i)
      for (int j = i + 1; j < 8; ++j)
        if (rng() & 1) qp.q_off[{i, j}] = (rng() & 1) ? 1.5 : -0.5;
    auto g = build_graph(qp);
    REQUIRE(g.edges.size() == qp.q_off.size());
    for (const auto& e : g.edges) CHECK(qp.q_off.count(e) == 1);
  }
}

TEST_CASE("build_graph commutes with node relabeling") {
  auto qp = parse_instance(
      R"({"n":4,"q":[[0,0,1.0],[1,1,-1.0],[0,1,1.0],[1,3,2.0],[2,3,-3.0]],"c":[0,0,0,0]})");
  std::vector<int> perm = {2, 0, 3, 1};  // old -> new label
  SparseQp qp2;
  qp2.n = 4;
  qp2.c.assign(4, 0.0);
  for (auto& [i, v] : qp.q_diag) qp2.q_diag[perm[i]] = v;
  for (auto& [e, v] : qp.q_off) {
    int a = perm[e.first], b = perm[e.second];
    if (a > b) std::swap(a, b);
    qp2.q_off[{a, b}] = v;
  }
  auto g = build_graph(qp);
  auto g2 = build_graph(qp2);
  for (int i = 0; i < 4; ++i) {
    CHECK(g.has_plus(i) == g2.has_plus(perm[i]));
    CHECK(g.has_minus(i) == g2.has_minus(perm[i]));
    auto nb = neighborhood(g, i);
    std::vector<int> mapped;
    for (int x : nb) mapped.push_back(perm[x]);
    std::sort(mapped.begin(), mapped.end());
    CHECK(mapped == neighborhood(g2, perm[i]));
  }
}

TEST_CASE("objective_at matches the 2*q_ij convention") {
  auto qp = parse_instance(R"({"n":2,"q":[[0,0,1.0],[0,1,-2.0]],"c":[3.0,0.5]})");
  std::vector<double> z = {0.5, 1.0};
  // 1*0.25 + 2*(-2)*0.5*1 + 3*0.5 + 0.5*1 = 0.25 - 2 + 1.5 + 0.5
  CHECK(qp.objective_at(z) == doctest::Approx(0.25).epsilon(1e-12));
}
