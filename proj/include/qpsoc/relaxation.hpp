// Perspective inequalities on plus-loop windows, their SOC lifting, and the
// level-r relaxation hierarchy.
#pragma once
#include <string>
#include <utility>
#include <vector>

#include "qpsoc/instance.hpp"
#include "qpsoc/monomial.hpp"

namespace qpsoc {

// One summand of the perspective right-hand side: numerator ell_d(J, M\J),
// denominator ell_{d-1}(J\{i}, M\J), for a pattern J containing the plus node.
struct PerspectiveTerm {
  std::vector<int> pattern;  // J, sorted, contains the plus node
  LinearForm numerator;
  LinearForm denominator;
};

struct PerspectiveInequality {
  Monomial target;          // z_ii
  std::vector<int> window;  // M, sorted, contains the plus node
  std::vector<PerspectiveTerm> terms;  // 2^{|M|-1} of them
  int plus_node() const { return target.nodes[0]; }
};

// ell_{|M|}(J, M\J) >= 0 for every J subseteq M.
struct SupportSystem {
  std::vector<LinearForm> inequalities;
};

// Scalar variable t(J) for one perspective term, named by its content so that
// identical terms from different call sites share a column.
struct AuxVar {
  int plus_node = 0;
  std::vector<int> window;
  std::vector<int> pattern;
  std::string id() const;
  friend auto operator<=>(const AuxVar&, const AuxVar&) = default;
};

// t * linear_side >= quad_side^2 with t >= 0 (linear_side >= 0 comes from the
// support system).
struct RotatedCone {
  AuxVar aux;
  LinearForm linear_side;
  LinearForm quad_side;
};

// z_ii - sum_J t(J) >= 0 together with one rotated cone per term.
struct LiftedPerspective {
  Monomial target;
  std::vector<RotatedCone> cones;
};

std::pair<PerspectiveInequality, SupportSystem> build_block_system(const LoopGraph& g, int i,
                                                                   std::vector<int> window);
// Same construction without graph-side preconditions (hull blocks use this).
std::pair<PerspectiveInequality, SupportSystem> build_window_system(int i,
                                                                    std::vector<int> window);

LiftedPerspective lift_to_soc(const PerspectiveInequality& p);

// Sum of perspective_value over the terms; throws std::domain_error when a
// denominator is below -1e-9 (support violated at the point).
double rhs_value(const PerspectiveInequality& p, const Assignment& point);

// A relaxation: linear rows (each form >= 0), plus lifted perspective systems
// in (i, M) lexicographic order. `perspectives` keeps the pre-lift form of
// each system for validation.
struct Relaxation {
  std::vector<LinearForm> linear;
  std::vector<PerspectiveInequality> perspectives;
  std::vector<LiftedPerspective> lifted;
};

// Level-r relaxation: one window system per plus node i and M subseteq N(i)
// with i in M, |M| = min(r, |N(i)|); box rows for every node, McCormick rows
// for every edge, minus-loop rows; support forms deduplicated across windows.
Relaxation hierarchy(const LoopGraph& g, int r);

}  // namespace qpsoc
