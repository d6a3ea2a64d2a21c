#include "qpsoc/decomposition.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qpsoc {

TreeDecomposition parse_td(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("td: malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("bags") || !doc["bags"].is_array())
    throw std::invalid_argument("td: expected object with \"bags\" array");
  TreeDecomposition td;
  for (const auto& bag : doc["bags"]) {
    if (!bag.is_array()) throw std::invalid_argument("td: each bag must be an array of nodes");
    std::vector<int> nodes;
    for (const auto& v : bag) {
      if (!v.is_number_integer()) throw std::invalid_argument("td: bag entries must be integers");
      nodes.push_back(v.get<int>());
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    td.bags.push_back(std::move(nodes));
  }
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) throw std::invalid_argument("td: \"edges\" must be an array");
    for (const auto& e : doc["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw std::invalid_argument("td: each edge must be a pair of bag indices");
      int a = e[0].get<int>(), b = e[1].get<int>();
      if (a < 0 || b < 0 || a >= static_cast<int>(td.bags.size()) ||
          b >= static_cast<int>(td.bags.size()))
        throw std::invalid_argument("td: bag index out of range in edge");
      td.tree_edges.emplace_back(a, b);
    }
  }
  return td;
}

std::string td_to_json(const TreeDecomposition& td) {
  nlohmann::json doc;
  doc["bags"] = nlohmann::json::array();
  for (const auto& bag : td.bags) doc["bags"].push_back(bag);
  doc["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : td.tree_edges) doc["edges"].push_back({a, b});
  return doc.dump();
}

namespace {

// adjacency over bag indices; empty optional when the edges do not form a tree
std::optional<std::vector<std::vector<int>>> tree_adjacency(const TreeDecomposition& td,
                                                            std::string* why) {
  const int m = static_cast<int>(td.bags.size());
  if (m == 0) {
    if (why) *why = "no bags";
    return std::nullopt;
  }
  if (static_cast<int>(td.tree_edges.size()) != m - 1) {
    if (why) *why = "tree must have exactly " + std::to_string(m - 1) + " edges";
    return std::nullopt;
  }
  std::vector<std::vector<int>> adj(static_cast<size_t>(m));
  for (const auto& [a, b] : td.tree_edges) {
    if (a == b || a < 0 || b < 0 || a >= m || b >= m) {
      if (why) *why = "bad tree edge (" + std::to_string(a) + "," + std::to_string(b) + ")";
      return std::nullopt;
    }
    adj[static_cast<size_t>(a)].push_back(b);
    adj[static_cast<size_t>(b)].push_back(a);
  }
  // connectivity (with m-1 edges this also rules out cycles)
  std::vector<char> seen(static_cast<size_t>(m), 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int u : adj[static_cast<size_t>(v)])
      if (!seen[static_cast<size_t>(u)]) {
        seen[static_cast<size_t>(u)] = 1;
        ++count;
        stack.push_back(u);
      }
  }
  if (count != m) {
    if (why) *why = "tree edges do not connect all bags";
    return std::nullopt;
  }
  return adj;
}

bool bag_contains(const std::vector<int>& bag, int v) {
  return std::binary_search(bag.begin(), bag.end(), v);
}

}  // namespace

TdValidity validate_td(const LoopGraph& g, const TreeDecomposition& td) {
  TdValidity r;
  std::ostringstream why;

  std::string tree_why;
  auto adj = tree_adjacency(td, &tree_why);
  r.tree_ok = adj.has_value();
  if (!r.tree_ok) why << "tree: " << tree_why << "; ";

  r.cover_ok = true;
  for (int v = 0; v < g.node_count && r.cover_ok; ++v) {
    bool found = false;
    for (const auto& bag : td.bags)
      if (bag_contains(bag, v)) {
        found = true;
        break;
      }
    if (!found) {
      r.cover_ok = false;
      why << "cover: node " << v << " in no bag; ";
    }
  }

  r.edges_ok = true;
  for (const auto& [a, b] : g.edges) {
    bool found = false;
    for (const auto& bag : td.bags)
      if (bag_contains(bag, a) && bag_contains(bag, b)) {
        found = true;
        break;
      }
    if (!found) {
      r.edges_ok = false;
      why << "edges: edge {" << a << "," << b << "} in no bag; ";
      break;
    }
  }

  r.connected_ok = true;
  if (r.tree_ok) {
    for (int v = 0; v < g.node_count && r.connected_ok; ++v) {
      std::vector<int> holders;
      for (size_t k = 0; k < td.bags.size(); ++k)
        if (bag_contains(td.bags[k], v)) holders.push_back(static_cast<int>(k));
      if (holders.size() <= 1) continue;
      std::set<int> holder_set(holders.begin(), holders.end());
      std::vector<int> stack = {holders[0]};
      std::set<int> seen = {holders[0]};
      while (!stack.empty()) {
        int b = stack.back();
        stack.pop_back();
        for (int u : (*adj)[static_cast<size_t>(b)])
          if (holder_set.count(u) && !seen.count(u)) {
            seen.insert(u);
            stack.push_back(u);
          }
      }
      if (seen.size() != holders.size()) {
        r.connected_ok = false;
        why << "connected: bags containing node " << v << " are not a subtree; ";
      }
    }
  } else {
    r.connected_ok = false;
  }

  r.detail = why.str();
  return r;
}

WidthSpread width_and_spread(const TreeDecomposition& td) {
  WidthSpread ws;
  int max_node = -1;
  for (const auto& bag : td.bags) {
    ws.width = std::max(ws.width, static_cast<int>(bag.size()) - 1);
    for (int v : bag) max_node = std::max(max_node, v);
  }
  ws.spread.assign(static_cast<size_t>(max_node + 1), 0);
  for (const auto& bag : td.bags)
    for (int v : bag) ws.spread[static_cast<size_t>(v)] += static_cast<int>(bag.size()) - 1;
  return ws;
}

ConditionReport check_conditions(const LoopGraph& g, const TreeDecomposition& td, int bound) {
  ConditionReport r;
  std::ostringstream why;

  r.c1 = true;
  for (size_t k = 0; k < td.bags.size(); ++k) {
    int plus = 0;
    for (int v : td.bags[k])
      if (v < g.node_count && g.has_plus(v)) ++plus;
    if (plus > 1) {
      r.c1 = false;
      why << "C1: bag " << k << " holds " << plus << " plus nodes; ";
      break;
    }
  }

  auto ws = width_and_spread(td);
  r.width = ws.width;
  r.c2 = ws.width <= bound;
  if (!r.c2) why << "C2: width " << ws.width << " exceeds " << bound << "; ";

  r.c3 = true;
  for (int v : g.plus_nodes()) {
    int s = v < static_cast<int>(ws.spread.size()) ? ws.spread[static_cast<size_t>(v)] : 0;
    r.max_plus_spread = std::max(r.max_plus_spread, s);
  }
  if (r.max_plus_spread > bound) {
    r.c3 = false;
    why << "C3: plus spread " << r.max_plus_spread << " exceeds " << bound << "; ";
  }

  r.detail = why.str();
  return r;
}

std::optional<TdStrategy> td_strategy_from_name(const std::string& name) {
  if (name == "acyclic") return TdStrategy::acyclic;
  if (name == "cycle") return TdStrategy::cycle;
  if (name == "vertex-cover") return TdStrategy::vertex_cover;
  if (name == "min-degree") return TdStrategy::min_degree;
  return std::nullopt;
}

namespace {

TreeDecomposition construct_acyclic(const LoopGraph& g) {
  const int n = g.node_count;
  // forest check: |E| = n - #components
  std::vector<int> parent(static_cast<size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[static_cast<size_t>(v)] != v) {
      parent[static_cast<size_t>(v)] = parent[static_cast<size_t>(parent[static_cast<size_t>(v)])];
      v = parent[static_cast<size_t>(v)];
    }
    return v;
  };
  for (const auto& [a, b] : g.edges) {
    int ra = find(a), rb = find(b);
    if (ra == rb) throw std::invalid_argument("acyclic strategy: graph has a cycle");
    parent[static_cast<size_t>(ra)] = rb;
  }

  TreeDecomposition td;
  // bag per edge; chain a node's edge bags together so its bags form a subtree
  std::vector<int> last_bag_of(static_cast<size_t>(n), -1);
  std::vector<char> covered(static_cast<size_t>(n), 0);
  auto add_bag = [&](std::vector<int> nodes) {
    int idx = static_cast<int>(td.bags.size());
    for (int v : nodes) covered[static_cast<size_t>(v)] = 1;
    td.bags.push_back(std::move(nodes));
    return idx;
  };
  // BFS per component from the smallest node; bag for each tree edge toward parent
  std::vector<char> seen(static_cast<size_t>(n), 0);
  int previous_component_bag = -1;
  for (int root = 0; root < n; ++root) {
    if (seen[static_cast<size_t>(root)]) continue;
    seen[static_cast<size_t>(root)] = 1;
    int component_first_bag = -1;
    std::vector<int> queue = {root};
    for (size_t qi = 0; qi < queue.size(); ++qi) {
      int v = queue[qi];
      for (int u : g.adjacent(v)) {
        if (seen[static_cast<size_t>(u)]) continue;
        seen[static_cast<size_t>(u)] = 1;
        queue.push_back(u);
        int idx = add_bag({std::min(v, u), std::max(v, u)});
        if (last_bag_of[static_cast<size_t>(v)] >= 0)
          td.tree_edges.emplace_back(last_bag_of[static_cast<size_t>(v)], idx);
        last_bag_of[static_cast<size_t>(v)] = idx;
        last_bag_of[static_cast<size_t>(u)] = idx;
        if (component_first_bag < 0) component_first_bag = idx;
      }
    }
    if (component_first_bag < 0) {  // isolated node
      component_first_bag = add_bag({root});
      last_bag_of[static_cast<size_t>(root)] = component_first_bag;
    }
    if (previous_component_bag >= 0)
      td.tree_edges.emplace_back(previous_component_bag, component_first_bag);
    previous_component_bag = component_first_bag;
  }
  return td;
}

TreeDecomposition construct_cycle(const LoopGraph& g) {
  const int n = g.node_count;
  if (n < 3 || static_cast<int>(g.edges.size()) != n)
    throw std::invalid_argument("cycle strategy: graph is not a single cycle");
  for (int v = 0; v < n; ++v)
    if (g.adjacent(v).size() != 2)
      throw std::invalid_argument("cycle strategy: node " + std::to_string(v) +
                                  " does not have degree 2");
  int anchor = -1;  // the shared third node of every bag; must carry no plus loop
  for (int v = 0; v < n; ++v)
    if (!g.has_plus(v)) {
      anchor = v;
      break;
    }
  if (anchor < 0)
    throw std::invalid_argument("cycle strategy: every node carries a plus loop");

  // walk the cycle starting at the anchor, toward its smaller neighbor
  std::vector<int> walk = {anchor, g.adjacent(anchor)[0]};
  while (static_cast<int>(walk.size()) < n) {
    int v = walk.back(), prev = walk[walk.size() - 2];
    for (int u : g.adjacent(v))
      if (u != prev) {
        walk.push_back(u);
        break;
      }
  }
  if (static_cast<int>(walk.size()) != n)
    throw std::invalid_argument("cycle strategy: graph is not connected");
  // order so the anchor comes last: v_0 .. v_{n-2}, v_{n-1} = anchor
  std::vector<int> order(walk.begin() + 1, walk.end());
  order.push_back(anchor);

  TreeDecomposition td;
  for (int i = 0; i + 2 < n; ++i) {
    std::vector<int> bag = {order[static_cast<size_t>(i)], order[static_cast<size_t>(i + 1)],
                            anchor};
    std::sort(bag.begin(), bag.end());
    td.bags.push_back(std::move(bag));
    if (i) td.tree_edges.emplace_back(i - 1, i);
  }
  return td;
}

TreeDecomposition construct_vertex_cover(const LoopGraph& g) {
  const int n = g.node_count;
  if (!stable_plus_set(g))
    throw std::invalid_argument("vertex-cover strategy: plus nodes are not a stable set");
  // greedy maximal stable set containing all plus nodes
  std::vector<char> in_s(static_cast<size_t>(n), 0), blocked(static_cast<size_t>(n), 0);
  auto take = [&](int v) {
    in_s[static_cast<size_t>(v)] = 1;
    for (int u : g.adjacent(v)) blocked[static_cast<size_t>(u)] = 1;
  };
  for (int v : g.plus_nodes()) take(v);
  for (int v = 0; v < n; ++v)
    if (!in_s[static_cast<size_t>(v)] && !blocked[static_cast<size_t>(v)]) take(v);

  std::vector<int> hub;
  for (int v = 0; v < n; ++v)
    if (!in_s[static_cast<size_t>(v)]) hub.push_back(v);

  TreeDecomposition td;
  if (hub.empty()) {  // edgeless graph: chain singleton bags
    for (int v = 0; v < n; ++v) {
      td.bags.push_back({v});
      if (v) td.tree_edges.emplace_back(v - 1, v);
    }
    return td;
  }
  td.bags.push_back(hub);
  for (int v = 0; v < n; ++v) {
    if (!in_s[static_cast<size_t>(v)]) continue;
    std::vector<int> bag = g.adjacent(v);
    bag.insert(std::lower_bound(bag.begin(), bag.end(), v), v);
    td.bags.push_back(std::move(bag));
    td.tree_edges.emplace_back(0, static_cast<int>(td.bags.size()) - 1);
  }
  return td;
}

TreeDecomposition construct_min_degree(const LoopGraph& g) {
  const int n = g.node_count;
  std::vector<std::set<int>> adj(static_cast<size_t>(n));
  for (const auto& [a, b] : g.edges) {
    adj[static_cast<size_t>(a)].insert(b);
    adj[static_cast<size_t>(b)].insert(a);
  }
  std::vector<char> gone(static_cast<size_t>(n), 0);
  std::vector<int> elim_pos(static_cast<size_t>(n), -1);
  std::vector<int> bag_of(static_cast<size_t>(n), -1);

  TreeDecomposition td;
  std::vector<std::vector<int>> bags;
  std::vector<std::vector<int>> fill_neighbors(static_cast<size_t>(n));
  for (int step = 0; step < n; ++step) {
    int best = -1;
    size_t best_deg = 0;
    for (int v = 0; v < n; ++v) {
      if (gone[static_cast<size_t>(v)]) continue;
      size_t d = adj[static_cast<size_t>(v)].size();
      if (best < 0 || d < best_deg) {
        best = v;
        best_deg = d;
      }
    }
    int v = best;
    gone[static_cast<size_t>(v)] = 1;
    elim_pos[static_cast<size_t>(v)] = step;
    std::vector<int> bag = {v};
    for (int u : adj[static_cast<size_t>(v)]) bag.push_back(u);
    std::sort(bag.begin(), bag.end());
    fill_neighbors[static_cast<size_t>(v)] =
        std::vector<int>(adj[static_cast<size_t>(v)].begin(), adj[static_cast<size_t>(v)].end());
    bag_of[static_cast<size_t>(v)] = static_cast<int>(bags.size());
    bags.push_back(std::move(bag));
    // clique fill among remaining neighbors
    const auto& nb = fill_neighbors[static_cast<size_t>(v)];
    for (size_t x = 0; x < nb.size(); ++x) {
      adj[static_cast<size_t>(nb[x])].erase(v);
      for (size_t y = x + 1; y < nb.size(); ++y) {
        adj[static_cast<size_t>(nb[x])].insert(nb[y]);
        adj[static_cast<size_t>(nb[y])].insert(nb[x]);
      }
    }
  }
  td.bags = bags;
  // parent of v's bag: bag of the earliest-eliminated node among v's fill neighbors
  int previous_root = -1;
  for (int v = 0; v < n; ++v) {
    const auto& nb = fill_neighbors[static_cast<size_t>(v)];
    int parent = -1, parent_pos = n + 1;
    for (int u : nb)
      if (elim_pos[static_cast<size_t>(u)] > elim_pos[static_cast<size_t>(v)] &&
          elim_pos[static_cast<size_t>(u)] < parent_pos) {
        parent = u;
        parent_pos = elim_pos[static_cast<size_t>(u)];
      }
    if (parent >= 0) {
      td.tree_edges.emplace_back(bag_of[static_cast<size_t>(v)],
                                 bag_of[static_cast<size_t>(parent)]);
    } else {
      // component root: chain roots so the result is one tree
      if (previous_root >= 0)
        td.tree_edges.emplace_back(previous_root, bag_of[static_cast<size_t>(v)]);
      previous_root = bag_of[static_cast<size_t>(v)];
    }
  }
  return td;
}

}  // namespace

TreeDecomposition construct_td(const LoopGraph& g, TdStrategy strategy) {
  if (g.node_count == 0) throw std::invalid_argument("construct_td: empty graph");
  switch (strategy) {
    case TdStrategy::acyclic: return construct_acyclic(g);
    case TdStrategy::cycle: return construct_cycle(g);
    case TdStrategy::vertex_cover: return construct_vertex_cover(g);
    case TdStrategy::min_degree: return construct_min_degree(g);
  }
  throw std::logic_error("construct_td: unknown strategy");
}

TreeDecomposition contract_plus_subtrees(const LoopGraph& g, const TreeDecomposition& td) {
  auto cond = check_conditions(g, td, std::max(kDefaultBudget, g.node_count));
  if (!cond.c1)
    throw std::invalid_argument("contract: C1 violated — " + cond.detail);

  TreeDecomposition cur = td;
  for (int i : g.plus_nodes()) {
    std::vector<int> holders;
    for (size_t k = 0; k < cur.bags.size(); ++k)
      if (std::binary_search(cur.bags[k].begin(), cur.bags[k].end(), i))
        holders.push_back(static_cast<int>(k));
    if (holders.size() <= 1) continue;

    std::set<int> merged_set(holders.begin(), holders.end());
    std::vector<int> merged_bag;
    for (int k : holders)
      merged_bag.insert(merged_bag.end(), cur.bags[static_cast<size_t>(k)].begin(),
                        cur.bags[static_cast<size_t>(k)].end());
    std::sort(merged_bag.begin(), merged_bag.end());
    merged_bag.erase(std::unique(merged_bag.begin(), merged_bag.end()), merged_bag.end());

    // new index map: merged bag replaces the smallest holder index
    TreeDecomposition next;
    std::vector<int> remap(cur.bags.size(), -1);
    for (size_t k = 0; k < cur.bags.size(); ++k) {
      if (merged_set.count(static_cast<int>(k))) {
        if (static_cast<int>(k) == holders[0]) {
          remap[k] = static_cast<int>(next.bags.size());
          next.bags.push_back(merged_bag);
        }
        // other holders collapse into holders[0]'s slot (filled below)
      } else {
        remap[k] = static_cast<int>(next.bags.size());
        next.bags.push_back(cur.bags[k]);
      }
    }
    for (size_t k = 0; k < cur.bags.size(); ++k)
      if (remap[k] < 0) remap[k] = remap[static_cast<size_t>(holders[0])];
    std::set<std::pair<int, int>> new_edges;
    for (const auto& [a, b] : cur.tree_edges) {
      int na = remap[static_cast<size_t>(a)], nb = remap[static_cast<size_t>(b)];
      if (na == nb) continue;  // internal to the merged subtree
      new_edges.emplace(std::min(na, nb), std::max(na, nb));
    }
    next.tree_edges.assign(new_edges.begin(), new_edges.end());
    cur = std::move(next);
  }
  return cur;
}

std::vector<Block> decompose(const LoopGraph& g, const TreeDecomposition& td) {
  auto validity = validate_td(g, td);
  if (!validity.ok())
    throw std::invalid_argument("decompose: invalid tree decomposition — " + validity.detail);
  auto cond = check_conditions(g, td, std::max(kDefaultBudget, g.node_count));
  if (!cond.c1) throw std::invalid_argument("decompose: C1 violated — " + cond.detail);

  const int m = static_cast<int>(td.bags.size());
  std::vector<std::optional<int>> plus_of(static_cast<size_t>(m));
  for (int v : g.plus_nodes()) {
    int holders = 0;
    for (int k = 0; k < m; ++k)
      if (std::binary_search(td.bags[static_cast<size_t>(k)].begin(),
                             td.bags[static_cast<size_t>(k)].end(), v)) {
        plus_of[static_cast<size_t>(k)] = v;
        ++holders;
      }
    if (holders != 1)
      throw std::invalid_argument("decompose: plus node " + std::to_string(v) + " lies in " +
                                  std::to_string(holders) + " bags; contract first");
  }
  for (const auto& bag : td.bags)
    if (bag.size() > 63) throw std::invalid_argument("decompose: bag exceeds 63 nodes");

  std::vector<int> degree(static_cast<size_t>(m), 0);
  std::vector<std::set<int>> adj(static_cast<size_t>(m));
  for (const auto& [a, b] : td.tree_edges) {
    adj[static_cast<size_t>(a)].insert(b);
    adj[static_cast<size_t>(b)].insert(a);
  }
  for (int k = 0; k < m; ++k) degree[static_cast<size_t>(k)] = static_cast<int>(adj[static_cast<size_t>(k)].size());

  std::vector<Block> out;
  std::vector<char> removed(static_cast<size_t>(m), 0);
  for (int emitted = 0; emitted < m; ++emitted) {
    int leaf = -1;
    for (int k = 0; k < m; ++k)
      if (!removed[static_cast<size_t>(k)] && degree[static_cast<size_t>(k)] <= 1) {
        leaf = k;
        break;
      }
    Block b;
    b.nodes = td.bags[static_cast<size_t>(leaf)];
    b.plus_node = plus_of[static_cast<size_t>(leaf)];
    out.push_back(std::move(b));
    removed[static_cast<size_t>(leaf)] = 1;
    for (int u : adj[static_cast<size_t>(leaf)])
      if (!removed[static_cast<size_t>(u)]) --degree[static_cast<size_t>(u)];
  }
  return out;
}

bool stable_plus_set(const LoopGraph& g) {
  for (const auto& [a, b] : g.edges)
    if (g.has_plus(a) && g.has_plus(b)) return false;
  return true;
}

}  // namespace qpsoc
