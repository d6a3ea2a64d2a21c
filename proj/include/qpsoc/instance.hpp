// Sparse box-constrained QP instances and their loop-graph representation.
#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qpsoc {

// min x'Qx + c'x over [0,1]^n, stored sparsely: q_diag holds nonzero q_ii,
// q_off holds each unordered pair {i,j}, i<j, once (the objective uses 2*q_ij).
struct SparseQp {
  int n = 0;
  std::map<int, double> q_diag;
  std::map<std::pair<int, int>, double> q_off;
  std::vector<double> c;

  double off(int i, int j) const;
  double objective_at(std::span<const double> z) const;

  bool operator==(const SparseQp&) const = default;
};

// Parses the instance JSON {"n":int,"q":[[i,j,v],...],"c":[...]}. Zero
// coefficients are dropped; duplicate or out-of-range entries are errors.
SparseQp parse_instance(const std::string& json_text);

// Node i has a plus loop iff q_ii > 0, a minus loop iff q_ii < 0; {i,j} is an
// edge iff q_ij != 0.
struct LoopGraph {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;  // i<j, sorted
  std::vector<char> plus_loop;             // size node_count
  std::vector<char> minus_loop;

  bool has_plus(int i) const { return plus_loop[static_cast<size_t>(i)] != 0; }
  bool has_minus(int i) const { return minus_loop[static_cast<size_t>(i)] != 0; }
  bool has_loop(int i) const { return has_plus(i) || has_minus(i); }

  std::vector<int> plus_nodes() const;
  std::vector<int> minus_nodes() const;

  // Adjacent nodes of i, sorted; does not include i.
  const std::vector<int>& adjacent(int i) const;

  bool operator==(const LoopGraph& o) const {
    return node_count == o.node_count && edges == o.edges &&
           plus_loop == o.plus_loop && minus_loop == o.minus_loop;
  }

  std::vector<std::vector<int>> adj_;  // filled by build_graph / finalize
  void finalize();
};

LoopGraph build_graph(const SparseQp& qp);

// N(i): adjacent nodes plus i itself when i carries a loop. Sorted.
std::vector<int> neighborhood(const LoopGraph& g, int i);

}  // namespace qpsoc
