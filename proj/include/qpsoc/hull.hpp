// Exact convex-hull constraint systems: RLT polytopes for loop-free blocks,
// the closed-form hull for a block with one plus loop, minus-loop rows.
#pragma once
#include <optional>
#include <vector>

#include "qpsoc/instance.hpp"
#include "qpsoc/relaxation.hpp"

namespace qpsoc {

struct BlockFormulation {
  std::vector<int> block_nodes;  // sorted
  std::optional<int> plus_node;
  std::vector<LinearForm> linear_inequalities;  // the 2^n RLT forms, each >= 0
  std::optional<PerspectiveInequality> perspective;
  std::vector<Monomial> monomials;  // the 2^n - 1 subset monomials introduced
};

// All 2^{|nodes|} inequalities ell(J, nodes\J) >= 0.
BlockFormulation rlt_polytope(std::vector<int> nodes);

// rlt_polytope(nodes) plus the perspective inequality on z_jj with the full
// block as window.
BlockFormulation complete_hull_one_plus_loop(std::vector<int> nodes, int j);

// Per minus loop i: z_i - z_ii >= 0 and the box rows z_i >= 0, 1 - z_i >= 0.
std::vector<LinearForm> minus_loop_constraints(const LoopGraph& g);

}  // namespace qpsoc
