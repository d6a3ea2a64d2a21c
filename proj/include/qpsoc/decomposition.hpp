// Tree decompositions: validation, width/spread, bag conditions, constructive
// strategies, plus-subtree contraction, and block extraction.
#pragma once
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpsoc/instance.hpp"

namespace qpsoc {

struct TreeDecomposition {
  std::vector<std::vector<int>> bags;             // each sorted ascending
  std::vector<std::pair<int, int>> tree_edges;    // bag-index pairs
};

TreeDecomposition parse_td(const std::string& json_text);
std::string td_to_json(const TreeDecomposition& td);

struct TdValidity {
  bool tree_ok = false;       // bag indices wired as a single tree
  bool cover_ok = false;      // every graph node appears in some bag
  bool edges_ok = false;      // every graph edge inside some bag
  bool connected_ok = false;  // bags containing a node form a subtree
  std::string detail;         // first counterexample per failed property
  bool ok() const { return tree_ok && cover_ok && edges_ok && connected_ok; }
};

TdValidity validate_td(const LoopGraph& g, const TreeDecomposition& td);

struct WidthSpread {
  int width = 0;              // max bag size - 1
  std::vector<int> spread;    // per node: sum over bags containing it of (bag size - 1)
};

WidthSpread width_and_spread(const TreeDecomposition& td);

inline constexpr int kDefaultBudget = 16;

struct ConditionReport {
  bool c1 = false;  // every bag has at most one plus-loop node
  bool c2 = false;  // width within budget
  bool c3 = false;  // plus-node spread within budget
  int width = 0;
  int max_plus_spread = 0;
  std::string detail;
  bool all() const { return c1 && c2 && c3; }
};

ConditionReport check_conditions(const LoopGraph& g, const TreeDecomposition& td,
                                 int bound = kDefaultBudget);

enum class TdStrategy { acyclic, cycle, vertex_cover, min_degree };

std::optional<TdStrategy> td_strategy_from_name(const std::string& name);

// acyclic: bag per edge along the forest; cycle: path of {v_i, v_{i+1}, v_last}
// triples with a loop-free last node; vertex_cover: star of closed
// neighborhoods around the hub V \ S for a greedy stable set S containing all
// plus nodes; min_degree: elimination-order heuristic, works on any graph.
TreeDecomposition construct_td(const LoopGraph& g, TdStrategy strategy);

// Merge, for each plus node, the subtree of bags containing it into one bag.
TreeDecomposition contract_plus_subtrees(const LoopGraph& g, const TreeDecomposition& td);

struct Block {
  std::vector<int> nodes;
  std::optional<int> plus_node;
};

// Peel leaf bags (lowest index first) into blocks; requires a valid td where
// every plus node sits in exactly one bag.
std::vector<Block> decompose(const LoopGraph& g, const TreeDecomposition& td);

// True iff no edge joins two plus-loop nodes.
bool stable_plus_set(const LoopGraph& g);

}  // namespace qpsoc
