// Branch enumeration with per-branch closed-form or grid minimization of the
// plus-loop coordinates, product-point sampling, system validation, and the
// SDP-comparison witness fixture.
#include "qpsoc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "qpsoc/decomposition.hpp"
#include "qpsoc/relaxation.hpp"

namespace qpsoc {

std::string oracle_mode_name(OracleMode m) {
  return m == OracleMode::exact_stable ? "exact-stable" : "grid";
}

namespace {

constexpr int kMaxBinaryNodes = 24;
constexpr double kEvalBudget = 2.7e8;  // grid-mode objective evaluations

struct Candidate {
  double value = 0.0;
  std::vector<double> z;
  bool set = false;

  // Total order: smaller value wins, then lexicographically smaller argmin,
  // so the merged result does not depend on evaluation order.
  bool beats(const Candidate& o) const {
    if (!set) return false;
    if (!o.set) return true;
    if (value != o.value) return value < o.value;
    return z < o.z;
  }
};

// argmin of alpha t^2 + beta t over [0,1]; candidates visited in increasing
// order with strict improvement, so ties resolve to the smaller coordinate.
double minimize_segment(double alpha, double beta) {
  double best_t = 0.0;
  double best_v = 0.0;
  auto consider = [&](double t) {
    double v = (alpha * t + beta) * t;
    if (v < best_v) {
      best_v = v;
      best_t = t;
    }
  };
  if (alpha > 0.0) consider(std::clamp(-beta / (2.0 * alpha), 0.0, 1.0));
  consider(1.0);
  return best_t;
}

struct BranchPlan {
  const SparseQp* qp = nullptr;
  const LoopGraph* g = nullptr;
  std::vector<int> binary_nodes;  // nodes without a plus loop, ascending
  std::vector<int> plus_nodes;    // ascending
  int steps = 0;                  // grid divisions per plus coordinate; 0 = closed form
};

void fill_binary(const BranchPlan& plan, std::uint32_t mask, std::vector<double>& z) {
  for (std::size_t j = 0; j < plan.binary_nodes.size(); ++j)
    z[static_cast<std::size_t>(plan.binary_nodes[j])] = (mask >> j) & 1u ? 1.0 : 0.0;
}

// Linear coefficient of z_p once every neighbor is fixed; with a stable plus
// set all neighbors of a plus node are binary, so this is exact per branch.
double folded_linear(const BranchPlan& plan, int p, const std::vector<double>& z) {
  double beta = plan.qp->c[static_cast<std::size_t>(p)];
  for (int j : plan.g->adjacent(p)) beta += 2.0 * plan.qp->off(p, j) * z[static_cast<std::size_t>(j)];
  return beta;
}

Candidate eval_closed_branch(const BranchPlan& plan, std::uint32_t mask) {
  std::vector<double> z(static_cast<std::size_t>(plan.qp->n), 0.0);
  fill_binary(plan, mask, z);
  for (int p : plan.plus_nodes)
    z[static_cast<std::size_t>(p)] =
        minimize_segment(plan.qp->q_diag.at(p), folded_linear(plan, p, z));
  double value = plan.qp->objective_at(z);
  return {value, std::move(z), true};
}

Candidate eval_grid_branch(const BranchPlan& plan, std::uint32_t mask) {
  std::vector<double> z(static_cast<std::size_t>(plan.qp->n), 0.0);
  fill_binary(plan, mask, z);
  Candidate best;
  std::vector<int> s(plan.plus_nodes.size(), 0);
  while (true) {
    for (std::size_t l = 0; l < s.size(); ++l)
      z[static_cast<std::size_t>(plan.plus_nodes[l])] =
          static_cast<double>(s[l]) / static_cast<double>(plan.steps);
    double value = plan.qp->objective_at(z);
    // Strict improvement over a lexicographically ascending scan keeps the
    // lexicographically smallest minimizer.
    if (!best.set || value < best.value) best = {value, z, true};
    std::size_t l = s.size();
    while (l > 0 && s[l - 1] == plan.steps) s[--l] = 0;
    if (l == 0) break;
    ++s[l - 1];
  }
  return best;
}

}  // namespace

OracleResult global_min(const SparseQp& qp, const OracleOptions& opts) {
  LoopGraph g = build_graph(qp);
  BranchPlan plan{&qp, &g, {}, {}, 0};
  for (int i = 0; i < g.node_count; ++i)
    (g.has_plus(i) ? plan.plus_nodes : plan.binary_nodes).push_back(i);
  if (plan.binary_nodes.size() > static_cast<std::size_t>(kMaxBinaryNodes))
    throw std::invalid_argument("oracle: enumeration budget exceeded (" +
                                std::to_string(plan.binary_nodes.size()) +
                                " nodes without a plus loop, limit " +
                                std::to_string(kMaxBinaryNodes) + ")");

  const bool grid = opts.force_grid || !stable_plus_set(g);
  const std::int64_t branches = std::int64_t{1} << plan.binary_nodes.size();
  if (grid) {
    if (!(opts.grid_step > 0.0) || opts.grid_step > 1.0)
      throw std::invalid_argument("oracle: grid step must lie in (0, 1]");
    plan.steps = std::max(1, static_cast<int>(std::llround(1.0 / opts.grid_step)));
    double evals = static_cast<double>(branches) *
                   std::pow(static_cast<double>(plan.steps) + 1.0,
                            static_cast<double>(plan.plus_nodes.size()));
    if (evals > kEvalBudget)
      throw std::invalid_argument("oracle: enumeration budget exceeded (about " +
                                  std::to_string(evals) + " grid evaluations)");
  }

  Candidate best;
#pragma omp parallel
  {
    Candidate local;
#pragma omp for schedule(static)
    for (std::int64_t b = 0; b < branches; ++b) {
      Candidate cand = grid ? eval_grid_branch(plan, static_cast<std::uint32_t>(b))
                            : eval_closed_branch(plan, static_cast<std::uint32_t>(b));
      if (cand.beats(local)) local = std::move(cand);
    }
#pragma omp critical(qpsoc_oracle_merge)
    {
      if (local.beats(best)) best = std::move(local);
    }
  }

  OracleResult result;
  result.value = best.value;
  result.argmin = std::move(best.z);
  result.mode = grid ? OracleMode::grid : OracleMode::exact_stable;
  if (grid) result.grid_step = 1.0 / static_cast<double>(plan.steps);
  return result;
}

std::vector<Assignment> sample_product_points(const LoopGraph& g, std::size_t count,
                                              std::uint64_t seed) {
  const int n = g.node_count;
  std::vector<Assignment> out;
  std::vector<double> z(static_cast<std::size_t>(n), 0.0);
  if (n <= 4) {
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? 1.0 : 0.0;
      out.push_back(product_point(z));
    }
  } else {
    std::fill(z.begin(), z.end(), 0.0);
    out.push_back(product_point(z));
    std::fill(z.begin(), z.end(), 1.0);
    out.push_back(product_point(z));
  }
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    for (int i = 0; i < n; ++i)
      z[static_cast<std::size_t>(i)] = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    out.push_back(product_point(z));
  }
  return out;
}

std::vector<Violation> validate_constraints(const GeneratedSystem& sys, const Assignment& point,
                                            double tol) {
  std::vector<Violation> out;
  for (const auto& row : sys.linear) {
    double v = row.evaluate(point);
    if (v < -tol) out.push_back({row.str() + " >= 0", v});
  }
  const double ptol = std::max(tol, kPerspectiveTol);
  for (const auto& lp : sys.lifted) {
    double total = 0.0;
    bool support_ok = true;
    for (const auto& cone : lp.cones) {
      double v = cone.linear_side.evaluate(point);
      if (v < -ptol) {
        out.push_back({cone.linear_side.str() + " >= 0 (term denominator)", v});
        support_ok = false;
        continue;
      }
      total += perspective_value(cone.quad_side.evaluate(point), v, ptol);
    }
    if (!support_ok) continue;
    double slack = point.value(lp.target) - total;
    if (!(slack >= -tol))
      out.push_back({lp.target.id() + " >= perspective sum", slack});
  }
  return out;
}

WitnessReport witness_compare_sdp() {
  Assignment pt;
  pt.set(Monomial::node(0), 0.25);
  pt.set(Monomial::node(1), 0.5);
  pt.set(Monomial::node(2), 0.5);
  pt.set(Monomial::loop(0), 3.0 / 16.0);
  pt.set(Monomial::loop(1), 0.5);
  pt.set(Monomial::loop(2), 0.5);
  pt.set(Monomial::subset({0, 1}), 0.0);
  pt.set(Monomial::subset({0, 2}), 0.0);
  pt.set(Monomial::subset({1, 2}), 0.25);
  // z_012 is pinned by the support rows: 0 <= z_012 <= z_01 = 0.
  pt.set(Monomial::subset({0, 1, 2}), 0.0);

  WitnessReport rep;
  rep.lhs = pt.value(Monomial::loop(0));
  rep.rhs = rhs_value(build_window_system(0, {0, 1, 2}).first, pt);

  auto zi = [&](int i) { return pt.value(Monomial::node(i)); };
  auto zij = [&](int i, int j) { return pt.value(Monomial::subset({i, j})); };

  rep.mccormick_ok = true;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      double y = zij(i, j);
      rep.mccormick_ok = rep.mccormick_ok && y >= 0.0 && y >= zi(i) + zi(j) - 1.0 &&
                         y <= zi(i) && y <= zi(j);
    }

  {
    double y01 = zij(0, 1), y02 = zij(0, 2), y12 = zij(1, 2);
    rep.triangle_ok = y01 + y02 <= zi(0) + y12 && y01 + y12 <= zi(1) + y02 &&
                      y02 + y12 <= zi(2) + y01 &&
                      zi(0) + zi(1) + zi(2) - y01 - y02 - y12 <= 1.0;
  }

  // Moment matrix of the point and its LDL^T certificate of semidefiniteness.
  const double A[4][4] = {{1, 0.25, 0.5, 0.5},
                          {0.25, 3.0 / 16.0, 0, 0},
                          {0.5, 0, 0.5, 0.25},
                          {0.5, 0, 0.25, 0.5}};
  const double L[4][4] = {{1, 0, 0, 0}, {0.25, 1, 0, 0}, {0.5, -1, 1, 0}, {0.5, -1, -1, 1}};
  const double D[4] = {1.0, 0.125, 0.125, 0.0};
  rep.d_nonnegative = true;
  for (double d : D) rep.d_nonnegative = rep.d_nonnegative && d >= 0.0;
  rep.ldlt_max_error = 0.0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += L[r][k] * D[k] * L[c][k];
      rep.ldlt_max_error = std::max(rep.ldlt_max_error, std::abs(v - A[r][c]));
    }

  auto zii = [&](int i) { return pt.value(Monomial::loop(i)); };
  rep.extended_triangle_first = {
      2 * zi(0) + zii(0) - 2 * zij(0, 1) - 2 * zij(0, 2) + zij(1, 2),
      2 * zi(1) - 2 * zij(0, 1) + zij(0, 2) + zii(1) - 2 * zij(1, 2),
      2 * zi(2) + zij(0, 1) - 2 * zij(0, 2) - 2 * zij(1, 2) + zii(2)};
  rep.extended_triangle_second = {
      4 * zi(0) + 4 * zii(0) - 4 * zij(0, 1) - 4 * zij(0, 2) + zij(1, 2),
      4 * zi(1) - 4 * zij(0, 1) + zij(0, 2) + 4 * zii(1) - 4 * zij(1, 2),
      4 * zi(2) + zij(0, 1) - 4 * zij(0, 2) - 4 * zij(1, 2) + 4 * zii(2)};
  return rep;
}

ProductValidator::Row ProductValidator::compile(const LinearForm& form) {
  Row r;
  r.constant = form.constant;
  for (const auto& [m, coef] : form.terms) {
    Term t;
    t.coef = coef;
    t.factors = m.nodes;
    if (m.is_loop()) t.factors.push_back(m.nodes[0]);
    r.terms.push_back(std::move(t));
  }
  return r;
}

double ProductValidator::Row::evaluate(std::span<const double> z) const {
  double v = constant;
  for (const auto& t : terms) {
    double prod = t.coef;
    for (int i : t.factors) prod *= z[static_cast<std::size_t>(i)];
    v += prod;
  }
  return v;
}

ProductValidator::ProductValidator(const GeneratedSystem& sys) : system_(sys) {
  for (const auto& row : sys.linear) rows_.push_back(compile(row));
  for (const auto& lp : sys.lifted) {
    PerspectivePlan plan;
    plan.node = lp.target.nodes[0];
    for (const auto& cone : lp.cones)
      plan.cones.emplace_back(compile(cone.quad_side), compile(cone.linear_side));
    perspectives_.push_back(std::move(plan));
  }
}

bool ProductValidator::feasible(std::span<const double> z, double tol) const {
  for (const auto& row : rows_)
    if (row.evaluate(z) < -tol) return false;
  const double ptol = std::max(tol, kPerspectiveTol);
  for (const auto& plan : perspectives_) {
    double total = 0.0;
    for (const auto& [num, den] : plan.cones) {
      double v = den.evaluate(z);
      if (v < -ptol) return false;
      total += perspective_value(num.evaluate(z), v, ptol);
    }
    double target = z[static_cast<std::size_t>(plan.node)];
    if (!(target * target >= total - tol)) return false;
  }
  return true;
}

std::size_t ProductValidator::count_infeasible(std::span<const std::vector<double>> points,
                                               double tol) const {
  const std::int64_t m = static_cast<std::int64_t>(points.size());
  std::size_t count = 0;
#pragma omp parallel for schedule(static) reduction(+ : count)
  for (std::int64_t i = 0; i < m; ++i)
    if (!feasible(points[static_cast<std::size_t>(i)], tol)) ++count;
  return count;
}

}  // namespace qpsoc
