// Monomial variables z_S / z_ii, RLT linear forms, and the closed perspective function.
#pragma once
#include <compare>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace qpsoc {

// A lifted variable: either the multilinear monomial z_S for a nonempty node
// subset S, or the loop variable z_ii (kept distinct from z_i and z_{ij}).
// The empty subset is never a Monomial; z_emptyset is the constant 1.
struct Monomial {
  enum class Kind { subset, loop };
  Kind kind = Kind::subset;
  std::vector<int> nodes;  // sorted, unique; exactly one node for loops

  static Monomial subset(std::vector<int> ids);
  static Monomial node(int i) { return subset({i}); }
  static Monomial loop(int i);

  bool is_loop() const { return kind == Kind::loop; }
  std::string id() const;  // "z1", "z1_2", loops as "z3_3"

  friend bool operator==(const Monomial& a, const Monomial& b) = default;
  friend std::strong_ordering operator<=>(const Monomial& a, const Monomial& b) {
    if (a.kind != b.kind) return a.kind == Kind::subset ? std::strong_ordering::less
                                                        : std::strong_ordering::greater;
    if (a.nodes.size() != b.nodes.size()) return a.nodes.size() <=> b.nodes.size();
    return a.nodes <=> b.nodes;
  }
};

// Point at which forms are evaluated: either an explicit monomial -> value map,
// or the product point of a box vector (z_S = prod z_i, z_ii = z_i^2), with
// optional per-monomial overrides.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::map<Monomial, double> values) : values_(std::move(values)) {}
  void set(const Monomial& m, double v) { values_[m] = v; }
  double value(const Monomial& m) const;  // throws std::out_of_range when unassigned
  bool has(const Monomial& m) const;

 private:
  friend Assignment product_point(std::span<const double> z);
  std::map<Monomial, double> values_;
  bool product_ = false;
  std::vector<double> z_;
};

Assignment product_point(std::span<const double> z);

struct LinearForm {
  double constant = 0.0;
  std::map<Monomial, double> terms;  // no zero coefficients stored

  void add(const Monomial& m, double coef);
  LinearForm& operator+=(const LinearForm& o);
  LinearForm& operator-=(const LinearForm& o);
  LinearForm& operator*=(double s);
  friend LinearForm operator+(LinearForm a, const LinearForm& b) { return a += b; }
  friend LinearForm operator-(LinearForm a, const LinearForm& b) { return a -= b; }
  double evaluate(const Assignment& p) const;
  std::string str() const;
  bool operator==(const LinearForm&) const = default;
  friend bool operator<(const LinearForm& a, const LinearForm& b);  // total order for dedup
};

// RLT linearization of prod_{J1} z * prod_{J2} (1-z):
// ell(J1, J2) = sum over t subseteq J2 of (-1)^|t| z_{J1 cup t}.
LinearForm ell(std::span<const int> j1, std::span<const int> j2);
inline LinearForm ell(const std::vector<int>& j1, const std::vector<int>& j2) {
  return ell(std::span<const int>(j1), std::span<const int>(j2));
}

inline constexpr double kPerspectiveTol = 1e-12;

// Closure of u^2/v over v >= 0: 0 at u=v=0, +infinity when u != 0, v = 0.
// Throws std::domain_error when v < -tol.
double perspective_value(double u, double v, double tol = kPerspectiveTol);

inline bool is_infinite(double x) { return x == std::numeric_limits<double>::infinity(); }

}  // namespace qpsoc
