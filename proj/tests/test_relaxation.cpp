#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <stdexcept>

#include "qpsoc/instance.hpp"
#include "qpsoc/relaxation.hpp"

using namespace qpsoc;

static double unit_draw(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

// triangle on {0,1,2} with a plus loop at 0
static LoopGraph triangle_plus0() {
  auto qp = parse_instance(
      R"({"n":3,"q":[[0,0,1.0],[0,1,-1.0],[0,2,2.0],[1,2,1.0]],"c":[0,0,0]})");
  return build_graph(qp);
}

TEST_CASE("two-node window reproduces the pairwise system") {
  auto g = triangle_plus0();
  auto [p, s] = build_block_system(g, 0, {0, 1});
  CHECK(p.target == Monomial::loop(0));
  CHECK(p.window == std::vector<int>{0, 1});
  REQUIRE(p.terms.size() == 2);
  // J={0}: (z_0 - z_01)^2 / (1 - z_1);  J={0,1}: z_01^2 / z_1
  CHECK(p.terms[0].pattern == std::vector<int>{0});
  CHECK(p.terms[0].numerator == ell({0}, {1}));
  CHECK(p.terms[0].denominator == ell({}, {1}));
  CHECK(p.terms[1].pattern == std::vector<int>{0, 1});
  CHECK(p.terms[1].numerator == ell({0, 1}, {}));
  CHECK(p.terms[1].denominator == ell({1}, {}));
  REQUIRE(s.inequalities.size() == 4);
  CHECK(s.inequalities[0] == ell({}, {0, 1}));
  CHECK(s.inequalities[1] == ell({0}, {1}));
  CHECK(s.inequalities[2] == ell({1}, {0}));
  CHECK(s.inequalities[3] == ell({0, 1}, {}));
}

TEST_CASE("three-node window has four terms with reduced denominators") {
  auto g = triangle_plus0();
  auto [p, s] = build_block_system(g, 0, {0, 1, 2});
  REQUIRE(p.terms.size() == 4);
  CHECK(p.terms[0].denominator == ell({}, {1, 2}));   // 1 - z_1 - z_2 + z_12
  CHECK(p.terms[1].denominator == ell({1}, {2}));     // z_1 - z_12
  CHECK(p.terms[2].denominator == ell({2}, {1}));     // z_2 - z_12
  CHECK(p.terms[3].denominator == ell({1, 2}, {}));   // z_12
  for (const auto& t : p.terms) CHECK(t.pattern.front() == 0);
  CHECK(s.inequalities.size() == 8);
}

TEST_CASE("singleton window is the weakest inequality") {
  auto g = triangle_plus0();
  auto [p, s] = build_block_system(g, 0, {0});
  REQUIRE(p.terms.size() == 1);
  CHECK(p.terms[0].numerator == ell({0}, {}));
  CHECK(p.terms[0].denominator.constant == 1.0);
  CHECK(p.terms[0].denominator.terms.empty());
  REQUIRE(s.inequalities.size() == 2);
  CHECK(s.inequalities[0] == ell({}, {0}));
  CHECK(s.inequalities[1] == ell({0}, {}));
}

TEST_CASE("build_block_system preconditions") {
  auto g = triangle_plus0();
  CHECK_THROWS_AS(build_block_system(g, 1, {1, 2}), std::invalid_argument);  // no plus loop at 1
  CHECK_THROWS_AS(build_block_system(g, 0, {1, 2}), std::invalid_argument);  // 0 not in window
  auto qp = parse_instance(R"({"n":4,"q":[[0,0,1.0],[0,1,1.0]],"c":[0,0,0,0]})");
  auto g2 = build_graph(qp);
  CHECK_THROWS_AS(build_block_system(g2, 0, {0, 3}), std::invalid_argument);  // 3 not in N(0)
}

TEST_CASE("lift_to_soc introduces one cone per term") {
  auto g = triangle_plus0();
  for (auto window : std::vector<std::vector<int>>{{0}, {0, 1}, {0, 1, 2}}) {
    auto [p, s] = build_block_system(g, 0, window);
    auto lifted = lift_to_soc(p);
    CHECK(lifted.cones.size() == (size_t{1} << (window.size() - 1)));
    CHECK(lifted.target == Monomial::loop(0));
    std::set<std::string> ids;
    for (const auto& c : lifted.cones) {
      ids.insert(c.aux.id());
      CHECK(c.linear_side == p.terms[&c - lifted.cones.data()].denominator);
      CHECK(c.quad_side == p.terms[&c - lifted.cones.data()].numerator);
    }
    CHECK(ids.size() == lifted.cones.size());
  }
  auto [p1, s1] = build_block_system(g, 0, {0});
  auto l1 = lift_to_soc(p1);
  CHECK(l1.cones[0].linear_side.constant == 1.0);  // t * 1 >= z_0^2
  CHECK(l1.cones[0].aux.id() == "t[0|0|0]");
}

TEST_CASE("rhs_value matches the hand-computed witness sum") {
  auto [p, s] = build_window_system(0, {0, 1, 2});
  Assignment pt;
  pt.set(Monomial::node(0), 0.25);
  pt.set(Monomial::node(1), 0.5);
  pt.set(Monomial::node(2), 0.5);
  pt.set(Monomial::subset({0, 1}), 0.0);
  pt.set(Monomial::subset({0, 2}), 0.0);
  pt.set(Monomial::subset({1, 2}), 0.25);
  pt.set(Monomial::subset({0, 1, 2}), 0.0);
  CHECK(rhs_value(p, pt) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("rhs_value boundary and error handling") {
  auto [p, s] = build_window_system(0, {0, 1});
  SUBCASE("all-zero point gives 0 through the closure") {
    std::vector<double> z = {0, 0};
    CHECK(rhs_value(p, product_point(z)) == 0.0);
  }
  SUBCASE("violated support throws") {
    Assignment pt;
    pt.set(Monomial::node(0), 0.5);
    pt.set(Monomial::node(1), -0.5);
    pt.set(Monomial::subset({0, 1}), 0.0);
    CHECK_THROWS_AS(rhs_value(p, pt), std::domain_error);
  }
  SUBCASE("nonzero numerator over zero denominator is infinite, not an error") {
    Assignment pt;
    pt.set(Monomial::node(0), 0.5);
    pt.set(Monomial::node(1), 0.0);
    pt.set(Monomial::subset({0, 1}), 0.3);
    CHECK(is_infinite(rhs_value(p, pt)));
  }
}

TEST_CASE("rhs equals z_i^2 at every product point") {
  auto qp = parse_instance(
      R"({"n":4,"q":[[0,0,1.0],[0,1,1.0],[0,2,1.0],[0,3,1.0],[1,2,1.0],[1,3,1.0],[2,3,1.0]],"c":[0,0,0,0]})");
  auto g = build_graph(qp);
  std::mt19937_64 rng(31);
  for (auto window : std::vector<std::vector<int>>{{0}, {0, 2}, {0, 1, 3}, {0, 1, 2, 3}}) {
    auto [p, s] = build_block_system(g, 0, window);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> z(4);
      for (auto& v : z) v = unit_draw(rng);
      if (trial % 7 == 0) z[1] = 0.0;  // touch the boundary too
      if (trial % 11 == 0) z[0] = 1.0;
      auto pt = product_point(z);
      for (const auto& f : s.inequalities) CHECK(f.evaluate(pt) >= -1e-9);
      CHECK(rhs_value(p, pt) == doctest::Approx(z[0] * z[0]).epsilon(1e-7));
    }
  }
}

// support-feasible non-product points: convex combinations of binary product points
static Assignment convex_combination_point(const std::vector<int>& window, std::mt19937_64& rng) {
  int n = window.back() + 1;
  std::vector<std::vector<double>> corners;
  std::vector<double> weights;
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    std::vector<double> z(static_cast<size_t>(n));
    for (auto& v : z) v = (rng() & 1) ? 1.0 : 0.0;
    corners.push_back(z);
    double w = unit_draw(rng) + 1e-3;
    weights.push_back(w);
    total += w;
  }
  Assignment pt;
  const uint64_t full = uint64_t{1} << window.size();
  for (uint64_t mask = 1; mask < full; ++mask) {
    std::vector<int> sub;
    for (size_t k = 0; k < window.size(); ++k)
      if (mask >> k & 1) sub.push_back(window[k]);
    auto m = Monomial::subset(sub);
    double v = 0.0;
    for (size_t k = 0; k < corners.size(); ++k) {
      double prod = 1.0;
      for (int i : sub) prod *= corners[k][static_cast<size_t>(i)];
      v += weights[k] / total * prod;
    }
    pt.set(m, v);
  }
  return pt;
}

TEST_CASE("larger windows dominate smaller ones at support-feasible points") {
  std::mt19937_64 rng(47);
  std::vector<int> m2 = {0, 1, 2, 3};
  for (int trial = 0; trial < 200; ++trial) {
    auto pt = convex_combination_point(m2, rng);
    auto [p2, s2] = build_window_system(0, m2);
    for (auto m1 : std::vector<std::vector<int>>{{0}, {0, 1}, {0, 2, 3}}) {
      auto [p1, s1] = build_window_system(0, m1);
      double r2 = rhs_value(p2, pt);
      double r1 = rhs_value(p1, pt);
      if (is_infinite(r1)) CHECK(is_infinite(r2));
      else if (!is_infinite(r2)) CHECK(r2 >= r1 - 1e-9);
    }
  }
}

TEST_CASE("SOC lift is tight at support-feasible points") {
  std::mt19937_64 rng(53);
  auto [p, s] = build_window_system(0, {0, 1, 2});
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(3);
    for (auto& v : z) v = unit_draw(rng);
    auto pt = product_point(z);
    auto lifted = lift_to_soc(p);
    double aux_sum = 0.0;
    for (const auto& c : lifted.cones) {
      double u = c.quad_side.evaluate(pt);
      double v = c.linear_side.evaluate(pt);
      double t = perspective_value(u, std::max(v, 0.0));
      REQUIRE(!is_infinite(t));
      CHECK(t * v >= u * u - 1e-9);        // cone satisfied
      CHECK(t * v <= u * u + 1e-9);        // with equality
      aux_sum += t;
    }
    CHECK(aux_sum == doctest::Approx(rhs_value(p, pt)).epsilon(1e-9));
    // linear row z_00 - sum t >= 0 holds with z_00 = z_0^2
    CHECK(z[0] * z[0] - aux_sum >= -1e-9);
  }
}

TEST_CASE("hierarchy emits the expected windows") {
  auto g = triangle_plus0();
  SUBCASE("level 2: two pairwise windows") {
    auto rel = hierarchy(g, 2);
    REQUIRE(rel.perspectives.size() == 2);
    CHECK(rel.perspectives[0].window == std::vector<int>{0, 1});
    CHECK(rel.perspectives[1].window == std::vector<int>{0, 2});
    CHECK(rel.lifted.size() == 2);
    // box(6) + mccormick(3 edges x 4) = 18; pairwise supports deduplicate into them
    CHECK(rel.linear.size() == 18);
  }
  SUBCASE("level 3: the single full-neighborhood window") {
    auto rel = hierarchy(g, 3);
    REQUIRE(rel.perspectives.size() == 1);
    CHECK(rel.perspectives[0].window == std::vector<int>{0, 1, 2});
    CHECK(rel.lifted[0].cones.size() == 4);
    CHECK(rel.linear.size() == 26);  // 18 + 8 three-node support forms
  }
  SUBCASE("level above the degree cap clamps to N(i)") {
    auto rel = hierarchy(g, 9);
    REQUIRE(rel.perspectives.size() == 1);
    CHECK(rel.perspectives[0].window == std::vector<int>{0, 1, 2});
  }
  SUBCASE("level 1: singleton windows only") {
    auto rel = hierarchy(g, 1);
    REQUIRE(rel.perspectives.size() == 1);
    CHECK(rel.perspectives[0].window == std::vector<int>{0});
  }
  SUBCASE("r < 1 rejected") { CHECK_THROWS_AS(hierarchy(g, 0), std::invalid_argument); }
}

TEST_CASE("hierarchy without plus loops is box + McCormick + minus rows") {
  auto qp = parse_instance(R"({"n":3,"q":[[1,1,-2.0],[0,1,1.0],[1,2,1.0]],"c":[0,0,0]})");
  auto g = build_graph(qp);
  auto rel = hierarchy(g, 3);
  CHECK(rel.perspectives.empty());
  CHECK(rel.lifted.empty());
  // box(6) + minus slack z_1 - z_11 (1, box rows dedup) + mccormick(2 edges x 4)
  CHECK(rel.linear.size() == 15);
}

TEST_CASE("hierarchy window count matches the binomial formula") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 15; ++trial) {
    SparseQp qp;
    qp.n = 7;
    qp.c.assign(7, 0.0);
    for (int i = 0; i < 7; ++i)
      if (rng() % 3 == 0) qp.q_diag[i] = (rng() & 1) ? 1.0 : -1.0;
    for (int i = 0; i < 7; ++i)
      for (int j = i + 1; j < 7; ++j)
        if (rng() & 1) qp.q_off[{i, j}] = 1.0;
    auto g = build_graph(qp);
    for (int r = 1; r <= 4; ++r) {
      auto rel = hierarchy(g, r);
      size_t expect = 0;
      for (int i : g.plus_nodes()) {
        size_t deg = neighborhood(g, i).size();
        size_t k = std::min<size_t>(static_cast<size_t>(r), deg) - 1;
        // C(deg-1, k)
        size_t c = 1;
        for (size_t t = 0; t < k; ++t) c = c * (deg - 1 - t) / (t + 1);
        expect += c;
      }
      CHECK(rel.perspectives.size() == expect);
      CHECK(rel.lifted.size() == expect);
    }
  }
}
