#include "qpsoc/relaxation.hpp"

#include <algorithm>
#include <cstdint>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qpsoc/hull.hpp"

namespace qpsoc {

std::string AuxVar::id() const {
  std::ostringstream os;
  os << "t[" << plus_node << '|';
  for (size_t k = 0; k < window.size(); ++k) os << (k ? "_" : "") << window[k];
  os << '|';
  for (size_t k = 0; k < pattern.size(); ++k) os << (k ? "_" : "") << pattern[k];
  os << ']';
  return os.str();
}

std::pair<PerspectiveInequality, SupportSystem> build_window_system(int i,
                                                                    std::vector<int> window) {
  std::sort(window.begin(), window.end());
  window.erase(std::unique(window.begin(), window.end()), window.end());
  if (!std::binary_search(window.begin(), window.end(), i))
    throw std::invalid_argument("window system: plus node not in window");
  if (window.size() > 63) throw std::invalid_argument("window system: window exceeds 63 nodes");

  std::vector<int> rest;  // M \ {i}
  for (int v : window)
    if (v != i) rest.push_back(v);

  PerspectiveInequality p;
  p.target = Monomial::loop(i);
  p.window = window;
  const uint64_t count = uint64_t{1} << rest.size();
  for (uint64_t mask = 0; mask < count; ++mask) {
    std::vector<int> j = {i}, comp;
    for (size_t k = 0; k < rest.size(); ++k) ((mask >> k & 1) ? j : comp).push_back(rest[k]);
    std::sort(j.begin(), j.end());
    PerspectiveTerm t;
    t.pattern = j;
    t.numerator = ell(j, comp);
    std::vector<int> j_less;  // J \ {i}
    for (int v : j)
      if (v != i) j_less.push_back(v);
    t.denominator = ell(j_less, comp);
    p.terms.push_back(std::move(t));
  }

  SupportSystem s;
  const uint64_t full = uint64_t{1} << window.size();
  for (uint64_t mask = 0; mask < full; ++mask) {
    std::vector<int> j, comp;
    for (size_t k = 0; k < window.size(); ++k) ((mask >> k & 1) ? j : comp).push_back(window[k]);
    s.inequalities.push_back(ell(j, comp));
  }
  return {std::move(p), std::move(s)};
}

std::pair<PerspectiveInequality, SupportSystem> build_block_system(const LoopGraph& g, int i,
                                                                   std::vector<int> window) {
  if (i < 0 || i >= g.node_count || !g.has_plus(i))
    throw std::invalid_argument("block system: node " + std::to_string(i) + " has no plus loop");
  auto nb = neighborhood(g, i);
  for (int v : window)
    if (!std::binary_search(nb.begin(), nb.end(), v))
      throw std::invalid_argument("block system: window node " + std::to_string(v) +
                                  " outside N(" + std::to_string(i) + ")");
  return build_window_system(i, std::move(window));
}

LiftedPerspective lift_to_soc(const PerspectiveInequality& p) {
  LiftedPerspective out;
  out.target = p.target;
  for (const auto& t : p.terms) {
    RotatedCone c;
    c.aux = AuxVar{p.plus_node(), p.window, t.pattern};
    c.linear_side = t.denominator;
    c.quad_side = t.numerator;
    out.cones.push_back(std::move(c));
  }
  return out;
}

double rhs_value(const PerspectiveInequality& p, const Assignment& point) {
  double total = 0.0;
  for (const auto& t : p.terms) {
    double u = t.numerator.evaluate(point);
    double v = t.denominator.evaluate(point);
    if (v < -1e-9)
      throw std::domain_error("rhs_value: support inequality violated (denominator " +
                              std::to_string(v) + ")");
    double pv = perspective_value(u, std::max(v, 0.0));
    if (is_infinite(pv)) return pv;
    total += pv;
  }
  return total;
}

namespace {

bool next_combination(std::vector<size_t>& idx, size_t pool) {
  size_t k = idx.size();
  for (size_t r = k; r-- > 0;) {
    if (idx[r] < pool - k + r) {
      ++idx[r];
      for (size_t q = r + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

Relaxation hierarchy(const LoopGraph& g, int r) {
  if (r < 1) throw std::invalid_argument("hierarchy: level must be at least 1");

  Relaxation out;
  std::set<LinearForm> seen;
  auto push = [&](const LinearForm& f) {
    if (seen.insert(f).second) out.linear.push_back(f);
  };

  for (int i = 0; i < g.node_count; ++i) {
    push(ell({i}, {}));  // z_i >= 0
    push(ell({}, {i}));  // 1 - z_i >= 0
  }
  for (const auto& f : minus_loop_constraints(g)) push(f);
  for (const auto& [a, b] : g.edges) {
    std::vector<int> e = {a, b};
    const uint64_t full = 4;
    for (uint64_t mask = 0; mask < full; ++mask) {
      std::vector<int> j, comp;
      for (int k = 0; k < 2; ++k) ((mask >> k & 1) ? j : comp).push_back(e[static_cast<size_t>(k)]);
      push(ell(j, comp));
    }
  }

  for (int i : g.plus_nodes()) {
    auto nb = neighborhood(g, i);
    std::vector<int> rest;
    for (int v : nb)
      if (v != i) rest.push_back(v);
    size_t pick = static_cast<size_t>(std::min<long long>(r, static_cast<long long>(nb.size()))) - 1;
    if (rest.size() < pick) continue;  // unreachable: pick <= |N(i)|-1
    // choose `pick` window partners from rest, lexicographically
    std::vector<size_t> idx(pick);
    for (size_t k = 0; k < pick; ++k) idx[k] = k;
    while (true) {
      std::vector<int> window = {i};
      for (size_t k : idx) window.push_back(rest[k]);
      std::sort(window.begin(), window.end());
      auto [p, s] = build_window_system(i, window);
      for (const auto& f : s.inequalities) push(f);
      out.lifted.push_back(lift_to_soc(p));
      out.perspectives.push_back(std::move(p));
      if (pick == 0 || !next_combination(idx, rest.size())) break;
    }
  }
  return out;
}

}  // namespace qpsoc
