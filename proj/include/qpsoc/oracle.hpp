// Brute-force global minimization over the box, product-point sampling,
// constraint validation, and a self-contained witness computation comparing
// the perspective bound against an SDP+McCormick+triangle-feasible point.
#pragma once
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qpsoc/conic.hpp"
#include "qpsoc/instance.hpp"
#include "qpsoc/monomial.hpp"

namespace qpsoc {

enum class OracleMode { exact_stable, grid };
std::string oracle_mode_name(OracleMode m);

struct OracleResult {
  double value = 0.0;
  std::vector<double> argmin;  // one coordinate per node
  OracleMode mode = OracleMode::exact_stable;
  std::optional<double> grid_step;  // set in grid mode
};

struct OracleOptions {
  double grid_step = 1e-3;
  bool force_grid = false;  // take the grid path even when the plus set is stable
};

// Global minimum of qp over [0,1]^n. Some minimizer has binary values on all
// nodes without a plus loop, so those are enumerated (at most 24 of them).
// Plus-loop coordinates are then minimized per branch: in closed form when no
// edge joins two plus loops, otherwise by joint grid search with the given
// step. Branches are processed in parallel; ties between equal-value branches
// resolve toward the lexicographically smaller argmin. Throws when the
// enumeration budget is exceeded.
OracleResult global_min(const SparseQp& qp, const OracleOptions& opts = {});

namespace reference {
// Serial twin of global_min, written independently and kept for regression
// against the parallel kernel.
OracleResult global_min(const SparseQp& qp, const OracleOptions& opts = {});
}  // namespace reference

// `count` uniform box points extended to product points, preceded by a fixed
// battery: every binary point when node_count <= 4, otherwise the all-zero
// and all-one vertices. Deterministic under seed.
std::vector<Assignment> sample_product_points(const LoopGraph& g, std::size_t count,
                                              std::uint64_t seed);

struct Violation {
  std::string constraint;
  double slack = 0.0;  // negative by the violated amount
};

// Checks every linear row (value >= -tol) and every lifted perspective system
// (z_ii >= sum of term values - tol, each term evaluated through
// perspective_value; auxiliary cone variables never appear in points).
std::vector<Violation> validate_constraints(const GeneratedSystem& sys, const Assignment& point,
                                            double tol);

// Fixture outcome: a point feasible for the SDP + McCormick + triangle
// relaxation on three nodes whose z_11 entry still falls short of the
// three-node perspective bound.
struct WitnessReport {
  double lhs = 0.0;  // z_11 at the point
  double rhs = 0.0;  // perspective bound evaluated at the point
  bool mccormick_ok = false;
  bool triangle_ok = false;
  double ldlt_max_error = 0.0;  // max entrywise |L D L^T - A|
  bool d_nonnegative = false;
  std::array<double, 3> extended_triangle_first{};
  std::array<double, 3> extended_triangle_second{};
};

WitnessReport witness_compare_sdp();

// Bulk feasibility of raw box vectors treated as product points. Rows and
// perspective terms are compiled to node-index plans once; count_infeasible
// then scans points in parallel. The _serial variant re-checks through the
// uncompiled Assignment path and is kept for regression and benchmarking.
class ProductValidator {
 public:
  explicit ProductValidator(const GeneratedSystem& sys);

  bool feasible(std::span<const double> z, double tol) const;
  std::size_t count_infeasible(std::span<const std::vector<double>> points, double tol) const;
  std::size_t count_infeasible_serial(std::span<const std::vector<double>> points,
                                      double tol) const;

 private:
  struct Term {
    std::vector<int> factors;  // node indices; loops appear twice
    double coef = 0.0;
  };
  struct Row {
    double constant = 0.0;
    std::vector<Term> terms;
    double evaluate(std::span<const double> z) const;
  };
  struct PerspectivePlan {
    int node = 0;  // target z_ii = z[node]^2
    std::vector<std::pair<Row, Row>> cones;  // (numerator, denominator)
  };

  static Row compile(const LinearForm& form);

  GeneratedSystem system_;  // retained for the serial reference path
  std::vector<Row> rows_;
  std::vector<PerspectivePlan> perspectives_;
};

}  // namespace qpsoc
