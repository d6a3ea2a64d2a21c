#include "qpsoc/monomial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace qpsoc {

Monomial Monomial::subset(std::vector<int> ids) {
  if (ids.empty()) throw std::invalid_argument("monomial: empty subset has no variable");
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  Monomial m;
  m.kind = Kind::subset;
  m.nodes = std::move(ids);
  return m;
}

Monomial Monomial::loop(int i) {
  Monomial m;
  m.kind = Kind::loop;
  m.nodes = {i};
  return m;
}

std::string Monomial::id() const {
  std::ostringstream os;
  os << 'z';
  for (size_t k = 0; k < nodes.size(); ++k) {
    if (k) os << '_';
    os << nodes[k];
  }
  if (is_loop()) os << '_' << nodes[0];
  return os.str();
}

double Assignment::value(const Monomial& m) const {
  auto it = values_.find(m);
  if (it != values_.end()) return it->second;
  if (!product_) throw std::out_of_range("assignment: unassigned monomial " + m.id());
  for (int i : m.nodes)
    if (i < 0 || static_cast<size_t>(i) >= z_.size())
      throw std::out_of_range("assignment: node out of range in " + m.id());
  if (m.is_loop()) return z_[static_cast<size_t>(m.nodes[0])] * z_[static_cast<size_t>(m.nodes[0])];
  double v = 1.0;
  for (int i : m.nodes) v *= z_[static_cast<size_t>(i)];
  return v;
}

bool Assignment::has(const Monomial& m) const {
  if (values_.count(m)) return true;
  if (!product_) return false;
  for (int i : m.nodes)
    if (i < 0 || static_cast<size_t>(i) >= z_.size()) return false;
  return true;
}

Assignment product_point(std::span<const double> z) {
  Assignment a;
  a.product_ = true;
  a.z_.assign(z.begin(), z.end());
  return a;
}

void LinearForm::add(const Monomial& m, double coef) {
  auto it = terms.find(m);
  if (it == terms.end()) {
    if (coef != 0.0) terms.emplace(m, coef);
    return;
  }
  it->second += coef;
  if (it->second == 0.0) terms.erase(it);
}

LinearForm& LinearForm::operator+=(const LinearForm& o) {
  constant += o.constant;
  for (const auto& [m, c] : o.terms) add(m, c);
  return *this;
}

LinearForm& LinearForm::operator-=(const LinearForm& o) {
  constant -= o.constant;
  for (const auto& [m, c] : o.terms) add(m, -c);
  return *this;
}

LinearForm& LinearForm::operator*=(double s) {
  if (s == 0.0) {
    constant = 0.0;
    terms.clear();
    return *this;
  }
  constant *= s;
  for (auto& [m, c] : terms) c *= s;
  return *this;
}

double LinearForm::evaluate(const Assignment& p) const {
  double v = constant;
  for (const auto& [m, c] : terms) v += c * p.value(m);
  return v;
}

std::string LinearForm::str() const {
  std::ostringstream os;
  bool first = true;
  if (constant != 0.0 || terms.empty()) {
    os << constant;
    first = false;
  }
  for (const auto& [m, c] : terms) {
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << '-';
    double a = std::abs(c);
    if (a != 1.0) os << a << '*';
    os << m.id();
    first = false;
  }
  return os.str();
}

bool operator<(const LinearForm& a, const LinearForm& b) {
  if (a.constant != b.constant) return a.constant < b.constant;
  return std::lexicographical_compare(a.terms.begin(), a.terms.end(), b.terms.begin(),
                                      b.terms.end(), [](const auto& x, const auto& y) {
                                        if (x.first != y.first) return x.first < y.first;
                                        return x.second < y.second;
                                      });
}

LinearForm ell(std::span<const int> j1, std::span<const int> j2) {
  std::vector<int> a(j1.begin(), j1.end()), b(j2.begin(), j2.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (int x : a)
    if (std::binary_search(b.begin(), b.end(), x))
      throw std::invalid_argument("ell: J1 and J2 overlap at node " + std::to_string(x));
  if (a.size() + b.size() > 63) throw std::invalid_argument("ell: window exceeds 63 nodes");

  LinearForm f;
  const uint64_t full = b.empty() ? 0 : (uint64_t{1} << b.size());
  for (uint64_t mask = 0;; ++mask) {
    std::vector<int> u = a;
    int bits = 0;
    for (size_t k = 0; k < b.size(); ++k)
      if (mask >> k & 1) {
        u.push_back(b[k]);
        ++bits;
      }
    double sign = (bits % 2) ? -1.0 : 1.0;
    if (u.empty()) {
      f.constant += sign;
    } else {
      std::sort(u.begin(), u.end());
      f.add(Monomial::subset(std::move(u)), sign);
    }
    if (mask + 1 >= full || full == 0) break;
  }
  return f;
}

double perspective_value(double u, double v, double tol) {
  if (v < -tol) throw std::domain_error("perspective: negative denominator");
  if (v > tol) return u * u / v;
  if (std::abs(u) <= tol) return 0.0;
  return std::numeric_limits<double>::infinity();
}

}  // namespace qpsoc
