#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <stdexcept>

#include "json.hpp"
#include "qpsoc/conic.hpp"
#include "qpsoc/decomposition.hpp"
#include "qpsoc/oracle.hpp"
#include "qpsoc/relaxation.hpp"

using namespace qpsoc;

static SparseQp make_qp(int n, std::map<int, double> diag,
                        std::map<std::pair<int, int>, double> off, std::vector<double> c = {}) {
  SparseQp qp;
  qp.n = n;
  qp.q_diag = std::move(diag);
  qp.q_off = std::move(off);
  qp.c = std::move(c);
  qp.c.resize(size_t(n), 0.0);
  return qp;
}

static ConicModel exact_model(const SparseQp& qp) {
  LoopGraph g = build_graph(qp);
  auto td = contract_plus_subtrees(g, construct_td(g, TdStrategy::min_degree));
  return assemble(qp, to_system(g, decompose(g, td)));
}

TEST_CASE("single plus loop assembles to the base-case cone") {
  auto qp = make_qp(1, {{0, 1.0}}, {}, {-1.0});
  auto model = assemble(qp, to_system(hierarchy(build_graph(qp), 1)));

  REQUIRE(model.vars.size() == 3);
  CHECK(model.vars[0].id == "z0");
  CHECK(model.vars[0].kind == VarKind::node);
  CHECK(model.vars[0].lb == 0.0);
  CHECK(model.vars[0].ub == 1.0);
  CHECK(model.vars[1].id == "z0_0");
  CHECK(model.vars[1].kind == VarKind::loop);
  CHECK(!model.vars[1].lb.has_value());
  CHECK(!model.vars[1].ub.has_value());
  CHECK(model.vars[2].kind == VarKind::aux);
  CHECK(model.vars[2].lb == 0.0);

  REQUIRE(model.rcones.size() == 1);
  CHECK(model.rcones[0].t == 2);
  CHECK(model.rcones[0].v.constant == 1.0);  // empty-window denominator
  CHECK(model.rcones[0].v.terms.empty());
  CHECK(model.rcones[0].u.terms == std::vector<std::pair<int, double>>{{0, 1.0}});

  // box rows, then z0_0 - t >= 0
  REQUIRE(model.lin.size() == 3);
  CHECK(model.lin.back().terms == std::vector<std::pair<int, double>>{{1, 1.0}, {2, -1.0}});

  CHECK(model.obj.constant == 0.0);
  CHECK(model.obj.terms == std::vector<std::pair<int, double>>{{0, -1.0}, {1, 1.0}});
  CHECK(model.warnings.empty());
  CHECK(model.var_index("z0_0") == 1);
  CHECK(model.var_index("nope") == -1);
}

TEST_CASE("triangle exact pipeline variable set") {
  auto qp = make_qp(3, {{0, 1.0}}, {{{0, 1}, 0.5}, {{0, 2}, -0.5}, {{1, 2}, 0.25}}, {-1.0, 0.0, 0.0});
  auto model = exact_model(qp);

  REQUIRE(model.vars.size() == 12);
  const char* expected[] = {"z0", "z1", "z2", "z0_1", "z0_2", "z1_2", "z0_1_2", "z0_0"};
  for (int i = 0; i < 8; ++i) CHECK(model.vars[size_t(i)].id == expected[i]);
  for (int i = 8; i < 12; ++i) {
    CHECK(model.vars[size_t(i)].kind == VarKind::aux);
    CHECK(model.vars[size_t(i)].id.substr(0, 1) == "t");
  }
  CHECK(model.rcones.size() == 4);

  // objective: q_00 z_00 + 2 q_ij z_ij + c_0 z_0
  std::vector<std::pair<int, double>> obj{{0, -1.0}, {3, 1.0}, {4, -1.0}, {5, 0.5}, {7, 1.0}};
  CHECK(model.obj.terms == obj);
  CHECK(model.warnings.empty());
}

TEST_CASE("linear objective assembles to a pure LP over the box") {
  auto qp = make_qp(3, {}, {}, {-1.0, 0.5, 0.0});
  auto model = assemble(qp, to_system(hierarchy(build_graph(qp), 1)));
  REQUIRE(model.vars.size() == 3);
  for (const auto& v : model.vars) CHECK(v.kind == VarKind::node);
  CHECK(model.lin.size() == 6);
  CHECK(model.rcones.empty());
  CHECK(model.obj.terms == std::vector<std::pair<int, double>>{{0, -1.0}, {1, 0.5}});
}

TEST_CASE("uncovered objective monomial is an assembly error") {
  auto covered = make_qp(2, {}, {});
  auto sys = to_system(hierarchy(build_graph(covered), 1));
  auto qp = make_qp(2, {}, {{{0, 1}, 1.0}});
  CHECK_THROWS_WITH_AS(assemble(qp, sys), doctest::Contains("not covered"),
                       std::invalid_argument);
}

TEST_CASE("loop-sign mismatches produce warnings") {
  // System built for a minus loop, objective weight flipped positive.
  auto minus = make_qp(1, {{0, -1.0}}, {});
  auto sys = to_system(hierarchy(build_graph(minus), 1));
  auto flipped = make_qp(1, {{0, 2.0}}, {});
  auto model = assemble(flipped, sys);
  REQUIRE(model.warnings.size() == 1);
  CHECK(model.warnings[0].find("minus-loop variable z0_0") != std::string::npos);

  // System built for a plus loop, objective weight flipped negative.
  auto plus = make_qp(1, {{0, 1.0}}, {});
  auto plus_sys = to_system(hierarchy(build_graph(plus), 1));
  auto neg = make_qp(1, {{0, -2.0}}, {});
  auto model2 = assemble(neg, plus_sys);
  REQUIRE(model2.warnings.size() == 1);
  CHECK(model2.warnings[0].find("plus-loop variable z0_0") != std::string::npos);
}

TEST_CASE("export / import round-trip") {
  auto qp = make_qp(3, {{0, 1.0}, {2, -0.5}}, {{{0, 1}, 0.5}, {{1, 2}, 0.25}}, {-1.0, 2.0, 0.0});
  auto model = assemble(qp, to_system(hierarchy(build_graph(qp), 2)));
  auto text = export_model(model);
  auto back = import_model(text);
  CHECK(back == model);
  CHECK(export_model(back) == text);
}

TEST_CASE("models without cones keep an empty rcones array") {
  auto qp = make_qp(2, {}, {}, {-1.0, 1.0});
  auto model = assemble(qp, to_system(hierarchy(build_graph(qp), 1)));
  auto doc = nlohmann::json::parse(export_model(model));
  REQUIRE(doc.contains("rcones"));
  CHECK(doc["rcones"].is_array());
  CHECK(doc["rcones"].empty());
  REQUIRE(doc.contains("vars"));
  REQUIRE(doc.contains("lin"));
  REQUIRE(doc.contains("obj"));
}

TEST_CASE("import rejects malformed documents") {
  CHECK_THROWS_AS(import_model("not json"), std::invalid_argument);
  CHECK_THROWS_AS(import_model("[]"), std::invalid_argument);
  CHECK_THROWS_AS(import_model(R"({"vars":[],"lin":[],"rcones":[]})"), std::invalid_argument);

  auto qp = make_qp(1, {{0, 1.0}}, {}, {-1.0});
  auto model = assemble(qp, to_system(hierarchy(build_graph(qp), 1)));
  auto doc = nlohmann::json::parse(export_model(model));

  auto tampered = doc;
  nlohmann::json bad_row;
  bad_row["const"] = 0.0;
  bad_row["terms"] = nlohmann::json::array({nlohmann::json::array({"zz9", 1.0})});
  tampered["lin"].push_back(bad_row);
  CHECK_THROWS_WITH_AS(import_model(tampered.dump()), doctest::Contains("undeclared"),
                       std::invalid_argument);

  tampered = doc;
  tampered["vars"].push_back(tampered["vars"][0]);
  CHECK_THROWS_WITH_AS(import_model(tampered.dump()), doctest::Contains("duplicate"),
                       std::invalid_argument);

  tampered = doc;
  tampered["vars"][0]["kind"] = "mystery";
  CHECK_THROWS_WITH_AS(import_model(tampered.dump()), doctest::Contains("kind"),
                       std::invalid_argument);

  tampered = doc;
  tampered["rcones"][0]["t"] = "zz9";
  CHECK_THROWS_WITH_AS(import_model(tampered.dump()), doctest::Contains("undeclared"),
                       std::invalid_argument);
}

TEST_CASE("check_primal flags bounds, rows, and cones") {
  auto qp = make_qp(1, {{0, 1.0}}, {}, {-1.0});
  auto model = assemble(qp, to_system(hierarchy(build_graph(qp), 1)));

  CHECK(check_primal(model, std::vector<double>{0.5, 0.25, 0.25}, 1e-9).empty());
  CHECK(check_primal(model, std::vector<double>{0.5, 0.3, 0.25}, 1e-9).empty());  // slack row

  auto wrong_len = check_primal(model, std::vector<double>{0.5}, 1e-9);
  REQUIRE(wrong_len.size() == 1);
  CHECK(wrong_len[0].find("entries") != std::string::npos);

  auto out_of_box = check_primal(model, std::vector<double>{1.5, 2.25, 2.25}, 1e-9);
  REQUIRE(!out_of_box.empty());
  CHECK(out_of_box[0].find("above upper bound") != std::string::npos);

  auto cone_broken = check_primal(model, std::vector<double>{0.5, 0.2, 0.2}, 1e-9);
  REQUIRE(!cone_broken.empty());
  bool saw_cone = false;
  for (const auto& msg : cone_broken) saw_cone = saw_cone || msg.find("rcone") != std::string::npos;
  CHECK(saw_cone);

  // tolerance is respected
  CHECK(check_primal(model, std::vector<double>{0.5, 0.25 - 1e-8, 0.25 - 1e-8}, 1e-6).empty());
}

TEST_CASE("null adapter validates without solving") {
  auto qp = make_qp(1, {{0, 1.0}}, {}, {-1.0});
  auto model = assemble(qp, to_system(hierarchy(build_graph(qp), 1)));
  auto adapter = make_adapter("null");
  REQUIRE(adapter != nullptr);
  CHECK(adapter->name() == "null");
  CHECK(adapter->available());
  auto r = solve(model, *adapter);
  CHECK(r.status == SolveStatus::numerical_limit);
  CHECK(r.primal.empty());
  CHECK(r.stats.at("adapter") == "null");
  CHECK(r.stats.at("validated") == "true");
}

TEST_CASE("adapter selection") {
  CHECK_THROWS_AS(make_adapter("whatnot"), std::invalid_argument);
  CHECK(make_adapter("cvxopt")->name() == "cvxopt");
  CHECK(make_adapter("clarabel")->name() == "clarabel");

  ::setenv("QPSOC_ADAPTER", "null", 1);
  CHECK(make_adapter()->name() == "null");
  ::unsetenv("QPSOC_ADAPTER");
  CHECK(make_adapter()->name() == "cvxopt");
}

TEST_CASE("status names round-trip") {
  CHECK(status_name(SolveStatus::optimal) == "optimal");
  CHECK(status_name(SolveStatus::infeasible) == "infeasible");
  CHECK(status_name(SolveStatus::unbounded) == "unbounded");
  CHECK(status_name(SolveStatus::numerical_limit) == "numerical-limit");
}

TEST_CASE("generated systems mirror relaxations") {
  auto qp = make_qp(3, {{0, 1.0}}, {{{0, 1}, 0.5}, {{1, 2}, -0.25}});
  auto rel = hierarchy(build_graph(qp), 2);
  auto sys = to_system(rel);
  CHECK(sys.linear == rel.linear);
  CHECK(sys.lifted.size() == rel.lifted.size());
}

TEST_CASE("assembled models stay feasible at sampled product points") {
  auto qp = make_qp(3, {{0, 1.0}}, {{{0, 1}, 0.5}, {{0, 2}, -0.5}, {{1, 2}, 0.25}}, {-1.0, 0.0, 1.0});
  LoopGraph g = build_graph(qp);
  auto sys = to_system(hierarchy(g, 2));
  auto model = assemble(qp, sys);

  // Extend each product point to the model's variable order, computing each
  // auxiliary as the closed perspective of its cone sides.
  for (const auto& pt : sample_product_points(g, 25, 3)) {
    std::vector<double> x(model.vars.size(), 0.0);
    size_t mono_count = 0;
    for (size_t i = 0; i < model.vars.size(); ++i)
      if (model.vars[i].kind != VarKind::aux) ++mono_count;
    for (size_t i = 0; i < mono_count; ++i) {
      const auto& id = model.vars[i].id;
      std::vector<int> nodes;
      for (size_t pos = 1; pos < id.size();) {
        size_t next = id.find('_', pos);
        if (next == std::string::npos) next = id.size();
        nodes.push_back(std::stoi(id.substr(pos, next - pos)));
        pos = next + 1;
      }
      Monomial m = model.vars[i].kind == VarKind::loop ? Monomial::loop(nodes[0])
                                                       : Monomial::subset(nodes);
      x[i] = pt.value(m);
    }
    for (const auto& cone : model.rcones)
      x[size_t(cone.t)] = perspective_value(cone.u.evaluate(x), cone.v.evaluate(x), 1e-9);
    CHECK(check_primal(model, x, 1e-9).empty());
  }
}
