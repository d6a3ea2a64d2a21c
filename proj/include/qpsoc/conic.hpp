// Conic model assembly, JSON round-trip, and pluggable solver adapters.
#pragma once
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qpsoc/decomposition.hpp"
#include "qpsoc/hull.hpp"
#include "qpsoc/instance.hpp"
#include "qpsoc/relaxation.hpp"

namespace qpsoc {

enum class VarKind { node, subset, loop, aux };
std::string var_kind_name(VarKind k);

struct VarInfo {
  std::string id;
  VarKind kind = VarKind::node;
  std::optional<double> lb, ub;
  bool operator==(const VarInfo&) const = default;
};

// Row over dense variable indices: constant + sum coef * x[index].
struct CompiledForm {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;  // sorted by index
  double evaluate(std::span<const double> x) const;
  bool operator==(const CompiledForm&) const = default;
};

// x[t] * v(x) >= u(x)^2 with x[t] >= 0, v(x) >= 0.
struct CompiledCone {
  int t = -1;
  CompiledForm v, u;
  bool operator==(const CompiledCone&) const = default;
};

struct ConicModel {
  std::vector<VarInfo> vars;
  std::vector<CompiledForm> lin;  // each >= 0
  std::vector<CompiledCone> rcones;
  CompiledForm obj;  // minimized
  std::vector<std::string> warnings;

  int var_index(const std::string& id) const;  // -1 when absent
  friend bool operator==(const ConicModel& a, const ConicModel& b) {
    return a.vars == b.vars && a.lin == b.lin && a.rcones == b.rcones && a.obj == b.obj;
  }
};

// Assembly input shared by the hierarchy and the exact block pipeline.
struct GeneratedSystem {
  std::vector<LinearForm> linear;
  std::vector<LiftedPerspective> lifted;
};

GeneratedSystem to_system(const Relaxation& rel);
// Per-block hull formulations (RLT or one-plus-loop hull) + minus-loop rows,
// with linear rows deduplicated across blocks.
GeneratedSystem to_system(const LoopGraph& g, const std::vector<Block>& blocks);

// Canonical variable table (nodes, subsets, loops, auxiliaries), compiled
// rows/cones, objective sum q_ii z_ii + 2 q_ij z_ij + c_i z_i. Throws when an
// objective monomial is not covered by any constraint.
ConicModel assemble(const SparseQp& qp, const GeneratedSystem& sys);

std::string export_model(const ConicModel& m);
ConicModel import_model(const std::string& json_text);

enum class SolveStatus { optimal, infeasible, unbounded, numerical_limit };
std::string status_name(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::numerical_limit;
  double objective = 0.0;
  std::vector<double> primal;  // aligned with model vars; empty unless optimal
  std::map<std::string, std::string> stats;
};

class SolverAdapter {
 public:
  virtual ~SolverAdapter() = default;
  virtual std::string name() const = 0;
  virtual bool available() const = 0;
  virtual std::vector<SolveResult> solve_batch(std::span<const ConicModel* const> models) = 0;
};

// Feasibility diagnostics for a candidate primal (bounds, rows, cones).
std::vector<std::string> check_primal(const ConicModel& m, std::span<const double> x, double tol);

inline constexpr double kPrimalRecheckTol = 1e-6;

// Solve, re-check the primal at kPrimalRecheckTol, and recompute the
// objective from the primal; failures downgrade the status to numerical_limit.
SolveResult solve(const ConicModel& m, SolverAdapter& adapter);
std::vector<SolveResult> solve_all(std::span<const ConicModel* const> models,
                                   SolverAdapter& adapter);

// "cvxopt" | "clarabel" (python subprocess bridges) | "null" (validation
// only). An empty name consults QPSOC_ADAPTER and falls back to "cvxopt".
std::unique_ptr<SolverAdapter> make_adapter(const std::string& name = "");

}  // namespace qpsoc
