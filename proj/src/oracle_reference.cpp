// Serial reference implementations: a plain odometer/recursion rewrite of the
// branch oracle and an uncompiled re-check path for bulk point validation.
// Kept deliberately independent of the parallel kernels in oracle.cpp.
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qpsoc/decomposition.hpp"
#include "qpsoc/oracle.hpp"

namespace qpsoc {
namespace reference {
namespace {

struct Best {
  double value = 0.0;
  std::vector<double> z;
  bool set = false;

  void offer(double value_in, const std::vector<double>& z_in) {
    if (!set || value_in < value || (value_in == value && z_in < z)) {
      value = value_in;
      z = z_in;
      set = true;
    }
  }
};

// Scans plus coordinates level by level in lexicographically ascending order.
void scan_grid(const SparseQp& qp, const std::vector<int>& plus, std::size_t level, int steps,
               std::vector<double>& z, Best& best) {
  if (level == plus.size()) {
    best.offer(qp.objective_at(z), z);
    return;
  }
  for (int s = 0; s <= steps; ++s) {
    z[static_cast<std::size_t>(plus[level])] =
        static_cast<double>(s) / static_cast<double>(steps);
    scan_grid(qp, plus, level + 1, steps, z, best);
  }
}

double segment_argmin(double alpha, double beta) {
  double at_zero = 0.0;
  double best_t = 0.0;
  double best_v = at_zero;
  if (alpha > 0.0) {
    double t = -beta / (2.0 * alpha);
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    double v = alpha * t * t + beta * t;
    if (v < best_v) {
      best_v = v;
      best_t = t;
    }
  }
  if (alpha + beta < best_v) best_t = 1.0;
  return best_t;
}

}  // namespace

OracleResult global_min(const SparseQp& qp, const OracleOptions& opts) {
  LoopGraph g = build_graph(qp);
  std::vector<int> binary_nodes, plus;
  for (int i = 0; i < g.node_count; ++i)
    (g.has_plus(i) ? plus : binary_nodes).push_back(i);
  if (binary_nodes.size() > 24)
    throw std::invalid_argument("oracle: enumeration budget exceeded (" +
                                std::to_string(binary_nodes.size()) +
                                " nodes without a plus loop, limit 24)");

  const bool grid = opts.force_grid || !stable_plus_set(g);
  int steps = 0;
  if (grid) {
    if (!(opts.grid_step > 0.0) || opts.grid_step > 1.0)
      throw std::invalid_argument("oracle: grid step must lie in (0, 1]");
    steps = std::max(1, static_cast<int>(std::llround(1.0 / opts.grid_step)));
    double evals = std::ldexp(std::pow(steps + 1.0, static_cast<double>(plus.size())),
                              static_cast<int>(binary_nodes.size()));
    if (evals > 2.7e8)
      throw std::invalid_argument("oracle: enumeration budget exceeded (about " +
                                  std::to_string(evals) + " grid evaluations)");
  }

  Best best;
  std::vector<int> digit(binary_nodes.size(), 0);
  std::vector<double> z(static_cast<std::size_t>(g.node_count), 0.0);
  while (true) {
    for (std::size_t j = 0; j < digit.size(); ++j)
      z[static_cast<std::size_t>(binary_nodes[j])] = digit[j];
    if (grid) {
      scan_grid(qp, plus, 0, steps, z, best);
    } else {
      for (int p : plus) {
        double beta = qp.c[static_cast<std::size_t>(p)];
        for (const auto& [edge, q] : qp.q_off) {
          if (edge.first == p) beta += 2.0 * q * z[static_cast<std::size_t>(edge.second)];
          if (edge.second == p) beta += 2.0 * q * z[static_cast<std::size_t>(edge.first)];
        }
        z[static_cast<std::size_t>(p)] = segment_argmin(qp.q_diag.at(p), beta);
      }
      best.offer(qp.objective_at(z), z);
    }
    std::size_t j = digit.size();
    while (j > 0 && digit[j - 1] == 1) digit[--j] = 0;
    if (j == 0) break;
    digit[j - 1] = 1;
  }

  OracleResult result;
  result.value = best.value;
  result.argmin = std::move(best.z);
  result.mode = grid ? OracleMode::grid : OracleMode::exact_stable;
  if (grid) result.grid_step = 1.0 / static_cast<double>(steps);
  return result;
}

}  // namespace reference

std::size_t ProductValidator::count_infeasible_serial(std::span<const std::vector<double>> points,
                                                      double tol) const {
  std::size_t count = 0;
  for (const auto& zvec : points) {
    Assignment point = product_point(zvec);
    if (!validate_constraints(system_, point, tol).empty()) ++count;
  }
  return count;
}

}  // namespace qpsoc
