#include "qpsoc/hull.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

namespace qpsoc {

BlockFormulation rlt_polytope(std::vector<int> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  if (nodes.empty() || nodes.size() > 63)
    throw std::invalid_argument("rlt_polytope: block must have 1..63 nodes");

  BlockFormulation b;
  b.block_nodes = nodes;
  const uint64_t full = uint64_t{1} << nodes.size();
  for (uint64_t mask = 0; mask < full; ++mask) {
    std::vector<int> j, comp;
    for (size_t k = 0; k < nodes.size(); ++k) ((mask >> k & 1) ? j : comp).push_back(nodes[k]);
    b.linear_inequalities.push_back(ell(j, comp));
    if (mask) b.monomials.push_back(Monomial::subset(j));
  }
  std::sort(b.monomials.begin(), b.monomials.end());
  return b;
}

BlockFormulation complete_hull_one_plus_loop(std::vector<int> nodes, int j) {
  auto b = rlt_polytope(std::move(nodes));
  if (!std::binary_search(b.block_nodes.begin(), b.block_nodes.end(), j))
    throw std::invalid_argument("hull: plus node " + std::to_string(j) + " not in block");
  b.plus_node = j;
  b.perspective = build_window_system(j, b.block_nodes).first;
  return b;
}

std::vector<LinearForm> minus_loop_constraints(const LoopGraph& g) {
  std::vector<LinearForm> out;
  for (int i : g.minus_nodes()) {
    LinearForm slack;  // z_i - z_ii >= 0
    slack.add(Monomial::node(i), 1.0);
    slack.add(Monomial::loop(i), -1.0);
    out.push_back(std::move(slack));
    out.push_back(ell({i}, {}));
    out.push_back(ell({}, {i}));
  }
  return out;
}

}  // namespace qpsoc
