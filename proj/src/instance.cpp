#include "qpsoc/instance.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

namespace qpsoc {

double SparseQp::off(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto it = q_off.find({i, j});
  return it == q_off.end() ? 0.0 : it->second;
}

double SparseQp::objective_at(std::span<const double> z) const {
  double v = 0.0;
  for (const auto& [i, q] : q_diag) v += q * z[static_cast<size_t>(i)] * z[static_cast<size_t>(i)];
  for (const auto& [e, q] : q_off)
    v += 2.0 * q * z[static_cast<size_t>(e.first)] * z[static_cast<size_t>(e.second)];
  for (int i = 0; i < n; ++i) v += c[static_cast<size_t>(i)] * z[static_cast<size_t>(i)];
  return v;
}

SparseQp parse_instance(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("instance: malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("n") || !doc.contains("c"))
    throw std::invalid_argument("instance: expected object with fields n, q, c");

  SparseQp qp;
  if (!doc["n"].is_number_integer() || doc["n"].get<long long>() <= 0)
    throw std::invalid_argument("instance: n must be a positive integer");
  qp.n = doc["n"].get<int>();

  if (!doc["c"].is_array() || doc["c"].size() != static_cast<size_t>(qp.n))
    throw std::invalid_argument("instance: c must be an array of n numbers");
  for (const auto& v : doc["c"]) {
    if (!v.is_number()) throw std::invalid_argument("instance: c entries must be numbers");
    qp.c.push_back(v.get<double>());
  }

  if (doc.contains("q")) {
    if (!doc["q"].is_array()) throw std::invalid_argument("instance: q must be an array of triples");
    for (const auto& entry : doc["q"]) {
      if (!entry.is_array() || entry.size() != 3 || !entry[0].is_number_integer() ||
          !entry[1].is_number_integer() || !entry[2].is_number())
        throw std::invalid_argument("instance: q entries must be [i, j, value] triples");
      int i = entry[0].get<int>();
      int j = entry[1].get<int>();
      double v = entry[2].get<double>();
      if (i < 0 || i >= qp.n || j < 0 || j >= qp.n)
        throw std::invalid_argument("instance: index out of range in q entry (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
      if (v == 0.0) continue;  // sparsity is exact nonzeroness
      if (i == j) {
        if (!qp.q_diag.emplace(i, v).second)
          throw std::invalid_argument("instance: duplicate diagonal entry for node " +
                                      std::to_string(i));
      } else {
        if (i > j) std::swap(i, j);
        auto [it, fresh] = qp.q_off.emplace(std::make_pair(i, j), v);
        if (!fresh) {
          if (it->second != v)
            throw std::invalid_argument("instance: pair (" + std::to_string(i) + "," +
                                        std::to_string(j) + ") appears twice with different values");
          throw std::invalid_argument("instance: duplicate entry for pair (" + std::to_string(i) +
                                      "," + std::to_string(j) + ")");
        }
      }
    }
  }
  return qp;
}

void LoopGraph::finalize() {
  adj_.assign(static_cast<size_t>(node_count), {});
  for (const auto& [i, j] : edges) {
    adj_[static_cast<size_t>(i)].push_back(j);
    adj_[static_cast<size_t>(j)].push_back(i);
  }
  for (auto& a : adj_) std::sort(a.begin(), a.end());
}

const std::vector<int>& LoopGraph::adjacent(int i) const {
  if (i < 0 || i >= node_count) throw std::out_of_range("graph: node out of range");
  return adj_[static_cast<size_t>(i)];
}

std::vector<int> LoopGraph::plus_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < node_count; ++i)
    if (has_plus(i)) out.push_back(i);
  return out;
}

std::vector<int> LoopGraph::minus_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < node_count; ++i)
    if (has_minus(i)) out.push_back(i);
  return out;
}

LoopGraph build_graph(const SparseQp& qp) {
  LoopGraph g;
  g.node_count = qp.n;
  g.plus_loop.assign(static_cast<size_t>(qp.n), 0);
  g.minus_loop.assign(static_cast<size_t>(qp.n), 0);
  for (const auto& [i, q] : qp.q_diag) {
    if (q > 0.0) g.plus_loop[static_cast<size_t>(i)] = 1;
    if (q < 0.0) g.minus_loop[static_cast<size_t>(i)] = 1;
  }
  for (const auto& [e, q] : qp.q_off) {
    (void)q;  // nonzero by construction
    g.edges.push_back(e);
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.finalize();
  return g;
}

std::vector<int> neighborhood(const LoopGraph& g, int i) {
  if (i < 0 || i >= g.node_count) throw std::out_of_range("neighborhood: node out of range");
  std::vector<int> out = g.adjacent(i);
  if (g.has_loop(i)) {
    out.insert(std::lower_bound(out.begin(), out.end(), i), i);
  }
  return out;
}

}  // namespace qpsoc
