#include "qpsoc/conic.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qpsoc {

std::string var_kind_name(VarKind k) {
  switch (k) {
    case VarKind::node: return "node";
    case VarKind::subset: return "subset";
    case VarKind::loop: return "loop";
    case VarKind::aux: return "aux";
  }
  return "?";
}

static std::optional<VarKind> kind_from_name(const std::string& s) {
  if (s == "node") return VarKind::node;
  if (s == "subset") return VarKind::subset;
  if (s == "loop") return VarKind::loop;
  if (s == "aux") return VarKind::aux;
  return std::nullopt;
}

double CompiledForm::evaluate(std::span<const double> x) const {
  double v = constant;
  for (const auto& [i, c] : terms) v += c * x[static_cast<size_t>(i)];
  return v;
}

int ConicModel::var_index(const std::string& id) const {
  for (size_t i = 0; i < vars.size(); ++i)
    if (vars[i].id == id) return static_cast<int>(i);
  return -1;
}

GeneratedSystem to_system(const Relaxation& rel) {
  GeneratedSystem sys;
  sys.linear = rel.linear;
  sys.lifted = rel.lifted;
  return sys;
}

GeneratedSystem to_system(const LoopGraph& g, const std::vector<Block>& blocks) {
  GeneratedSystem sys;
  std::set<LinearForm> seen;
  auto push = [&](const LinearForm& f) {
    if (seen.insert(f).second) sys.linear.push_back(f);
  };
  for (const auto& blk : blocks) {
    BlockFormulation bf = blk.plus_node ? complete_hull_one_plus_loop(blk.nodes, *blk.plus_node)
                                        : rlt_polytope(blk.nodes);
    for (const auto& f : bf.linear_inequalities) push(f);
    if (bf.perspective) sys.lifted.push_back(lift_to_soc(*bf.perspective));
  }
  for (const auto& f : minus_loop_constraints(g)) push(f);
  return sys;
}

ConicModel assemble(const SparseQp& qp, const GeneratedSystem& sys) {
  std::set<Monomial> monos;
  auto scan = [&](const LinearForm& f) {
    for (const auto& [m, c] : f.terms) monos.insert(m);
  };
  for (const auto& f : sys.linear) scan(f);
  std::set<AuxVar> auxes;
  std::set<Monomial> lifted_targets;
  for (const auto& lp : sys.lifted) {
    monos.insert(lp.target);
    lifted_targets.insert(lp.target);
    for (const auto& c : lp.cones) {
      auxes.insert(c.aux);
      scan(c.linear_side);
      scan(c.quad_side);
    }
  }

  auto covered = [&](const Monomial& m) { return monos.count(m) != 0; };
  for (const auto& [i, q] : qp.q_diag)
    if (!covered(Monomial::loop(i)))
      throw std::invalid_argument("assemble: objective monomial " + Monomial::loop(i).id() +
                                  " not covered by any constraint block");
  for (const auto& [e, q] : qp.q_off)
    if (!covered(Monomial::subset({e.first, e.second})))
      throw std::invalid_argument("assemble: objective monomial " +
                                  Monomial::subset({e.first, e.second}).id() +
                                  " not covered by any constraint block");
  for (int i = 0; i < qp.n; ++i)
    if (qp.c[static_cast<size_t>(i)] != 0.0 && !covered(Monomial::node(i)))
      throw std::invalid_argument("assemble: objective monomial " + Monomial::node(i).id() +
                                  " not covered by any constraint block");

  ConicModel model;
  std::map<Monomial, int> mono_index;
  for (const auto& m : monos) {
    VarInfo v;
    v.id = m.id();
    if (m.is_loop()) {
      v.kind = VarKind::loop;  // unbounded; closed by objective sign + rows
    } else {
      v.kind = m.nodes.size() == 1 ? VarKind::node : VarKind::subset;
      v.lb = 0.0;
      v.ub = 1.0;
    }
    mono_index[m] = static_cast<int>(model.vars.size());
    model.vars.push_back(std::move(v));
  }
  std::map<AuxVar, int> aux_index;
  for (const auto& a : auxes) {
    VarInfo v;
    v.id = a.id();
    v.kind = VarKind::aux;
    v.lb = 0.0;
    aux_index[a] = static_cast<int>(model.vars.size());
    model.vars.push_back(std::move(v));
  }

  auto compile = [&](const LinearForm& f) {
    CompiledForm out;
    out.constant = f.constant;
    for (const auto& [m, c] : f.terms) out.terms.emplace_back(mono_index.at(m), c);
    return out;
  };
  for (const auto& f : sys.linear) model.lin.push_back(compile(f));
  for (const auto& lp : sys.lifted) {
    CompiledForm row;  // z_ii - sum_J t(J) >= 0
    row.terms.emplace_back(mono_index.at(lp.target), 1.0);
    for (const auto& c : lp.cones) row.terms.emplace_back(aux_index.at(c.aux), -1.0);
    std::sort(row.terms.begin(), row.terms.end());
    model.lin.push_back(std::move(row));
    for (const auto& c : lp.cones) {
      CompiledCone cc;
      cc.t = aux_index.at(c.aux);
      cc.v = compile(c.linear_side);
      cc.u = compile(c.quad_side);
      model.rcones.push_back(std::move(cc));
    }
  }

  for (const auto& [i, q] : qp.q_diag)
    model.obj.terms.emplace_back(mono_index.at(Monomial::loop(i)), q);
  for (const auto& [e, q] : qp.q_off)
    model.obj.terms.emplace_back(mono_index.at(Monomial::subset({e.first, e.second})), 2.0 * q);
  for (int i = 0; i < qp.n; ++i)
    if (qp.c[static_cast<size_t>(i)] != 0.0)
      model.obj.terms.emplace_back(mono_index.at(Monomial::node(i)), qp.c[static_cast<size_t>(i)]);
  std::sort(model.obj.terms.begin(), model.obj.terms.end());

  for (const auto& [m, idx] : mono_index) {
    if (!m.is_loop()) continue;
    auto it = qp.q_diag.find(m.nodes[0]);
    double q = it == qp.q_diag.end() ? 0.0 : it->second;
    if (lifted_targets.count(m)) {
      if (q <= 0.0)
        model.warnings.push_back("plus-loop variable " + m.id() +
                                 " carries nonpositive objective weight; model may be unbounded");
    } else if (q >= 0.0) {
      model.warnings.push_back("minus-loop variable " + m.id() +
                               " carries nonnegative objective weight; model may be unbounded");
    }
  }
  return model;
}

namespace {

nlohmann::json form_to_json(const CompiledForm& f, const std::vector<VarInfo>& vars) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [i, c] : f.terms)
    terms.push_back({vars[static_cast<size_t>(i)].id, c});
  return {{"const", f.constant}, {"terms", std::move(terms)}};
}

nlohmann::json model_to_json(const ConicModel& m) {
  nlohmann::json doc;
  doc["vars"] = nlohmann::json::array();
  for (const auto& v : m.vars) {
    nlohmann::json jv = {{"id", v.id}, {"kind", var_kind_name(v.kind)}};
    if (v.lb) jv["lb"] = *v.lb;
    if (v.ub) jv["ub"] = *v.ub;
    doc["vars"].push_back(std::move(jv));
  }
  doc["lin"] = nlohmann::json::array();
  for (const auto& f : m.lin) doc["lin"].push_back(form_to_json(f, m.vars));
  doc["rcones"] = nlohmann::json::array();
  for (const auto& c : m.rcones)
    doc["rcones"].push_back({{"t", m.vars[static_cast<size_t>(c.t)].id},
                             {"v", form_to_json(c.v, m.vars)},
                             {"u", form_to_json(c.u, m.vars)}});
  doc["obj"] = form_to_json(m.obj, m.vars);
  return doc;
}

CompiledForm form_from_json(const nlohmann::json& j, const std::map<std::string, int>& index) {
  if (!j.is_object() || !j.contains("const") || !j.contains("terms") || !j["const"].is_number() ||
      !j["terms"].is_array())
    throw std::invalid_argument("model: linear form needs numeric \"const\" and \"terms\" array");
  CompiledForm f;
  f.constant = j["const"].get<double>();
  for (const auto& t : j["terms"]) {
    if (!t.is_array() || t.size() != 2 || !t[0].is_string() || !t[1].is_number())
      throw std::invalid_argument("model: each term must be [varId, coef]");
    auto it = index.find(t[0].get<std::string>());
    if (it == index.end())
      throw std::invalid_argument("model: undeclared variable " + t[0].get<std::string>());
    f.terms.emplace_back(it->second, t[1].get<double>());
  }
  std::sort(f.terms.begin(), f.terms.end());
  return f;
}

}  // namespace

std::string export_model(const ConicModel& m) { return model_to_json(m).dump(); }

ConicModel import_model(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model: malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("vars") || !doc["vars"].is_array() ||
      !doc.contains("lin") || !doc.contains("rcones") || !doc.contains("obj"))
    throw std::invalid_argument("model: expected object with vars, lin, rcones, obj");

  ConicModel m;
  std::map<std::string, int> index;
  for (const auto& jv : doc["vars"]) {
    if (!jv.is_object() || !jv.contains("id") || !jv["id"].is_string() || !jv.contains("kind") ||
        !jv["kind"].is_string())
      throw std::invalid_argument("model: each var needs string id and kind");
    VarInfo v;
    v.id = jv["id"].get<std::string>();
    auto kind = kind_from_name(jv["kind"].get<std::string>());
    if (!kind) throw std::invalid_argument("model: unknown var kind " + jv["kind"].dump());
    v.kind = *kind;
    if (jv.contains("lb")) {
      if (!jv["lb"].is_number()) throw std::invalid_argument("model: lb must be a number");
      v.lb = jv["lb"].get<double>();
    }
    if (jv.contains("ub")) {
      if (!jv["ub"].is_number()) throw std::invalid_argument("model: ub must be a number");
      v.ub = jv["ub"].get<double>();
    }
    if (!index.emplace(v.id, static_cast<int>(m.vars.size())).second)
      throw std::invalid_argument("model: duplicate variable id " + v.id);
    m.vars.push_back(std::move(v));
  }
  for (const auto& jf : doc["lin"]) m.lin.push_back(form_from_json(jf, index));
  for (const auto& jc : doc["rcones"]) {
    if (!jc.is_object() || !jc.contains("t") || !jc["t"].is_string() || !jc.contains("v") ||
        !jc.contains("u"))
      throw std::invalid_argument("model: each cone needs t, v, u");
    auto it = index.find(jc["t"].get<std::string>());
    if (it == index.end())
      throw std::invalid_argument("model: undeclared variable " + jc["t"].get<std::string>());
    CompiledCone c;
    c.t = it->second;
    c.v = form_from_json(jc["v"], index);
    c.u = form_from_json(jc["u"], index);
    m.rcones.push_back(std::move(c));
  }
  m.obj = form_from_json(doc["obj"], index);
  return m;
}

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_limit: return "numerical-limit";
  }
  return "?";
}

static std::optional<SolveStatus> status_from_name(const std::string& s) {
  if (s == "optimal") return SolveStatus::optimal;
  if (s == "infeasible") return SolveStatus::infeasible;
  if (s == "unbounded") return SolveStatus::unbounded;
  if (s == "numerical-limit") return SolveStatus::numerical_limit;
  return std::nullopt;
}

std::vector<std::string> check_primal(const ConicModel& m, std::span<const double> x, double tol) {
  std::vector<std::string> out;
  if (x.size() != m.vars.size()) {
    out.push_back("primal has " + std::to_string(x.size()) + " entries, model has " +
                  std::to_string(m.vars.size()));
    return out;
  }
  for (size_t i = 0; i < m.vars.size(); ++i) {
    const auto& v = m.vars[i];
    if (v.lb && x[i] < *v.lb - tol)
      out.push_back(v.id + " = " + std::to_string(x[i]) + " below lower bound");
    if (v.ub && x[i] > *v.ub + tol)
      out.push_back(v.id + " = " + std::to_string(x[i]) + " above upper bound");
  }
  for (size_t k = 0; k < m.lin.size(); ++k) {
    double val = m.lin[k].evaluate(x);
    if (val < -tol)
      out.push_back("lin[" + std::to_string(k) + "] = " + std::to_string(val) + " < 0");
  }
  for (size_t k = 0; k < m.rcones.size(); ++k) {
    const auto& c = m.rcones[k];
    double t = x[static_cast<size_t>(c.t)];
    double v = c.v.evaluate(x);
    double u = c.u.evaluate(x);
    if (t < -tol) out.push_back("rcone[" + std::to_string(k) + "]: t < 0");
    if (v < -tol) out.push_back("rcone[" + std::to_string(k) + "]: v < 0");
    if (t * v - u * u < -tol)
      out.push_back("rcone[" + std::to_string(k) + "]: t*v - u^2 = " +
                    std::to_string(t * v - u * u) + " < 0");
  }
  return out;
}

namespace {

std::vector<std::string> validate_model(const ConicModel& m) {
  std::vector<std::string> out;
  std::set<std::string> ids;
  const int n = static_cast<int>(m.vars.size());
  for (const auto& v : m.vars) {
    if (!ids.insert(v.id).second) out.push_back("duplicate variable id " + v.id);
    if (v.lb && v.ub && *v.lb > *v.ub) out.push_back("empty bound interval on " + v.id);
  }
  auto check_form = [&](const CompiledForm& f, const std::string& where) {
    for (const auto& [i, c] : f.terms) {
      if (i < 0 || i >= n) out.push_back(where + ": variable index out of range");
      if (c == 0.0) out.push_back(where + ": zero coefficient stored");
    }
  };
  for (size_t k = 0; k < m.lin.size(); ++k) check_form(m.lin[k], "lin[" + std::to_string(k) + "]");
  for (size_t k = 0; k < m.rcones.size(); ++k) {
    const auto& c = m.rcones[k];
    if (c.t < 0 || c.t >= n) out.push_back("rcone[" + std::to_string(k) + "]: t out of range");
    check_form(c.v, "rcone[" + std::to_string(k) + "].v");
    check_form(c.u, "rcone[" + std::to_string(k) + "].u");
  }
  check_form(m.obj, "obj");
  return out;
}

class NullAdapter final : public SolverAdapter {
 public:
  std::string name() const override { return "null"; }
  bool available() const override { return true; }
  std::vector<SolveResult> solve_batch(std::span<const ConicModel* const> models) override {
    std::vector<SolveResult> out;
    for (const auto* m : models) {
      SolveResult r;
      r.status = SolveStatus::numerical_limit;
      auto problems = validate_model(*m);
      r.stats["adapter"] = "null";
      r.stats["validated"] = problems.empty() ? "true" : "false";
      if (!problems.empty()) r.stats["detail"] = problems.front();
      out.push_back(std::move(r));
    }
    return out;
  }
};

std::string solver_script_path() {
  if (const char* env = std::getenv("QPSOC_SOLVE_SCRIPT"); env && *env) return env;
  return QPSOC_SOLVER_SCRIPT_DEFAULT;
}

class SubprocessAdapter final : public SolverAdapter {
 public:
  explicit SubprocessAdapter(std::string backend) : backend_(std::move(backend)) {}

  std::string name() const override { return backend_; }

  bool available() const override {
    if (probed_ < 0) {
      std::string cmd = "python3 -c \"import " + backend_ + "\" 2>/dev/null";
      probed_ = std::system(cmd.c_str()) == 0 ? 1 : 0;
    }
    return probed_ == 1;
  }

  std::vector<SolveResult> solve_batch(std::span<const ConicModel* const> models) override {
    std::vector<SolveResult> out(models.size());
    if (models.empty()) return out;
    auto fail_all = [&](const std::string& why) {
      for (auto& r : out) {
        r.status = SolveStatus::numerical_limit;
        r.stats["error"] = why;
      }
      return out;
    };

    nlohmann::json req;
    req["backend"] = backend_;
    req["models"] = nlohmann::json::array();
    for (const auto* m : models) req["models"].push_back(model_to_json(*m));

    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path();
    std::string tag =
        std::to_string(::getpid()) + "_" + std::to_string(counter.fetch_add(1));
    auto req_path = dir / ("qpsoc_req_" + tag + ".json");
    auto resp_path = dir / ("qpsoc_resp_" + tag + ".json");
    auto err_path = dir / ("qpsoc_err_" + tag + ".log");
    {
      std::ofstream f(req_path);
      if (!f) return fail_all("cannot write " + req_path.string());
      f << req.dump();
    }
    std::string cmd = "python3 \"" + solver_script_path() + "\" \"" + req_path.string() + "\" \"" +
                      resp_path.string() + "\" 2> \"" + err_path.string() + "\"";
    int rc = std::system(cmd.c_str());

    std::string resp_text;
    {
      std::ifstream f(resp_path);
      std::ostringstream ss;
      ss << f.rdbuf();
      resp_text = ss.str();
    }
    auto cleanup = [&] {
      std::error_code ec;
      std::filesystem::remove(req_path, ec);
      std::filesystem::remove(resp_path, ec);
      std::filesystem::remove(err_path, ec);
    };
    if (rc != 0 || resp_text.empty()) {
      std::ifstream f(err_path);
      std::ostringstream ss;
      ss << f.rdbuf();
      auto err = ss.str();
      cleanup();
      return fail_all("solver bridge exited with code " + std::to_string(rc) +
                      (err.empty() ? "" : (": " + err.substr(0, 400))));
    }

    nlohmann::json resp;
    try {
      resp = nlohmann::json::parse(resp_text);
    } catch (const nlohmann::json::exception& e) {
      cleanup();
      return fail_all(std::string("bad bridge response: ") + e.what());
    }
    cleanup();
    if (!resp.is_object() || !resp.contains("results") || !resp["results"].is_array() ||
        resp["results"].size() != models.size())
      return fail_all("bridge response shape mismatch");

    for (size_t k = 0; k < models.size(); ++k) {
      const auto& jr = resp["results"][k];
      SolveResult r;
      r.stats["adapter"] = backend_;
      if (jr.contains("stats") && jr["stats"].is_object())
        for (const auto& [key, val] : jr["stats"].items())
          r.stats[key] = val.is_string() ? val.get<std::string>() : val.dump();
      auto st = jr.contains("status") && jr["status"].is_string()
                    ? status_from_name(jr["status"].get<std::string>())
                    : std::nullopt;
      r.status = st.value_or(SolveStatus::numerical_limit);
      if (jr.contains("objective") && jr["objective"].is_number())
        r.objective = jr["objective"].get<double>();
      if (r.status == SolveStatus::optimal) {
        if (!jr.contains("primal") || !jr["primal"].is_array() ||
            jr["primal"].size() != models[k]->vars.size()) {
          r.status = SolveStatus::numerical_limit;
          r.stats["error"] = "optimal status without a full primal";
        } else {
          for (const auto& v : jr["primal"]) r.primal.push_back(v.get<double>());
        }
      }
      out[k] = std::move(r);
    }
    return out;
  }

 private:
  std::string backend_;
  mutable int probed_ = -1;
};

}  // namespace

std::vector<SolveResult> solve_all(std::span<const ConicModel* const> models,
                                   SolverAdapter& adapter) {
  auto results = adapter.solve_batch(models);
  for (size_t k = 0; k < results.size(); ++k) {
    auto& r = results[k];
    if (r.status != SolveStatus::optimal) continue;
    auto violations = check_primal(*models[k], r.primal, kPrimalRecheckTol);
    if (!violations.empty()) {
      r.status = SolveStatus::numerical_limit;
      r.stats["revalidation"] = violations.front() +
                                (violations.size() > 1
                                     ? " (+" + std::to_string(violations.size() - 1) + " more)"
                                     : "");
      continue;
    }
    r.stats["solver_objective"] = std::to_string(r.objective);
    r.objective = models[k]->obj.evaluate(r.primal);
  }
  return results;
}

SolveResult solve(const ConicModel& m, SolverAdapter& adapter) {
  const ConicModel* ptr = &m;
  return solve_all(std::span<const ConicModel* const>(&ptr, 1), adapter)[0];
}

std::unique_ptr<SolverAdapter> make_adapter(const std::string& name) {
  std::string n = name;
  if (n.empty()) {
    if (const char* env = std::getenv("QPSOC_ADAPTER"); env && *env) n = env;
    else n = "cvxopt";
  }
  if (n == "null") return std::make_unique<NullAdapter>();
  if (n == "cvxopt" || n == "clarabel") return std::make_unique<SubprocessAdapter>(n);
  throw std::invalid_argument("unknown adapter " + n + " (expected cvxopt, clarabel, or null)");
}

}  // namespace qpsoc
