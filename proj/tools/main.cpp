// Command-line front end: builds relaxations and exact formulations from
// instance files, solves them through an adapter, and compares against the
// brute-force oracle.
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qpsoc/conic.hpp"
#include "qpsoc/decomposition.hpp"
#include "qpsoc/hull.hpp"
#include "qpsoc/instance.hpp"
#include "qpsoc/oracle.hpp"
#include "qpsoc/relaxation.hpp"

namespace {

using qpsoc::SolveStatus;

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string fnv1a_digest(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Ordered key/value report, printed as "key = value" lines or one JSON object.
class RunReport {
 public:
  void set(const std::string& key, const std::string& value) { put(key, value); }
  void set(const std::string& key, const char* value) { put(key, std::string(value)); }
  void set(const std::string& key, double value) {
    put(key, nlohmann::ordered_json(value), fmt_real(value));
  }
  void set(const std::string& key, long long value) { put(key, value); }
  void set(const std::string& key, std::size_t value) {
    put(key, static_cast<long long>(value));
  }
  void set(const std::string& key, int value) { put(key, static_cast<long long>(value)); }
  void set(const std::string& key, bool value) {
    put(key, nlohmann::ordered_json(value), value ? "true" : "false");
  }

  void print(bool as_json) const {
    if (as_json) {
      nlohmann::ordered_json doc;
      for (const auto& e : entries_) doc[e.key] = e.value;
      std::printf("%s\n", doc.dump(2).c_str());
      return;
    }
    for (const auto& e : entries_) std::printf("%s = %s\n", e.key.c_str(), e.text.c_str());
  }

 private:
  struct Entry {
    std::string key;
    nlohmann::ordered_json value;
    std::string text;
  };

  void put(const std::string& key, nlohmann::ordered_json value, std::string text) {
    entries_.push_back({key, std::move(value), std::move(text)});
  }
  void put(const std::string& key, const std::string& s) {
    put(key, nlohmann::ordered_json(s), s);
  }
  void put(const std::string& key, long long v) {
    put(key, nlohmann::ordered_json(v), std::to_string(v));
  }

  std::vector<Entry> entries_;
};

// Precondition failures of the exact pipeline; eligible for --fallback-level.
struct RefusalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LoadedInstance {
  qpsoc::SparseQp qp;
  qpsoc::LoopGraph g;
  std::string digest;
};

LoadedInstance load_instance(const std::string& path) {
  auto text = read_file(path);
  LoadedInstance li;
  li.qp = qpsoc::parse_instance(text);
  li.g = qpsoc::build_graph(li.qp);
  li.digest = fnv1a_digest(text);
  return li;
}

void add_graph_summary(RunReport& rep, const qpsoc::LoopGraph& g) {
  rep.set("V", static_cast<long long>(g.node_count));
  rep.set("E", static_cast<long long>(g.edges.size()));
  rep.set("L+", static_cast<long long>(g.plus_nodes().size()));
  rep.set("L-", static_cast<long long>(g.minus_nodes().size()));
  rep.set("stable+", qpsoc::stable_plus_set(g));
}

void add_model_summary(RunReport& rep, const qpsoc::ConicModel& m) {
  rep.set("variables", m.vars.size());
  rep.set("inequalities", m.lin.size());
  rep.set("cones", m.rcones.size());
  if (!m.warnings.empty()) {
    std::string joined;
    for (const auto& w : m.warnings) joined += (joined.empty() ? "" : "; ") + w;
    rep.set("warnings", joined);
  }
}

struct ExactOutcome {
  qpsoc::TreeDecomposition td;
  std::vector<qpsoc::Block> blocks;
  qpsoc::GeneratedSystem sys;
  qpsoc::ConicModel model;
  qpsoc::ConditionReport conditions;
};

ExactOutcome run_exact_pipeline(const LoadedInstance& li, const std::optional<std::string>& td_path,
                                const std::string& strategy_name, int budget) {
  if (!qpsoc::stable_plus_set(li.g))
    throw RefusalError(
        "refused: two plus loops are adjacent; the exact formulation needs the "
        "plus-loop nodes to form a stable set");

  ExactOutcome out;
  if (td_path) {
    out.td = qpsoc::parse_td(read_file(*td_path));
  } else {
    auto strategy = qpsoc::td_strategy_from_name(strategy_name);
    if (!strategy) throw std::runtime_error("unknown strategy " + strategy_name);
    out.td = qpsoc::construct_td(li.g, *strategy);
  }
  auto validity = qpsoc::validate_td(li.g, out.td);
  if (!validity.ok()) throw std::runtime_error("tree decomposition invalid: " + validity.detail);
  auto pre = qpsoc::check_conditions(li.g, out.td, budget);
  if (!pre.c1)
    throw RefusalError("refused: a bag holds more than one plus loop: " + pre.detail);

  out.td = qpsoc::contract_plus_subtrees(li.g, out.td);
  out.conditions = qpsoc::check_conditions(li.g, out.td, budget);
  out.blocks = qpsoc::decompose(li.g, out.td);
  out.sys = qpsoc::to_system(li.g, out.blocks);
  out.model = qpsoc::assemble(li.qp, out.sys);
  return out;
}

void add_td_summary(RunReport& rep, const ExactOutcome& out, int budget) {
  rep.set("bags", out.td.bags.size());
  rep.set("blocks", out.blocks.size());
  rep.set("width", out.conditions.width);
  rep.set("max_plus_spread", out.conditions.max_plus_spread);
  if (!out.conditions.c2 || !out.conditions.c3) {
    std::size_t bound = 0;
    for (const auto& b : out.blocks) bound += std::size_t{1} << b.nodes.size();
    rep.set("budget_warning", "width or plus spread exceeds " + std::to_string(budget) +
                                  "; support rows near " + std::to_string(bound));
  }
}

double solve_bound(const qpsoc::ConicModel& model, const std::string& adapter_name,
                   RunReport& rep) {
  auto adapter = qpsoc::make_adapter(adapter_name);
  rep.set("adapter", adapter->name());
  if (!adapter->available())
    throw std::runtime_error("adapter " + adapter->name() + " unavailable");
  auto r = qpsoc::solve(model, *adapter);
  rep.set("status", qpsoc::status_name(r.status));
  if (r.status != SolveStatus::optimal) {
    auto it = r.stats.find("detail");
    throw std::runtime_error("solve finished with status " + qpsoc::status_name(r.status) +
                             (it == r.stats.end() ? "" : (": " + it->second)));
  }
  rep.set("bound", r.objective);
  return r.objective;
}

int cmd_graph(const std::string& instance_path, RunReport& rep) {
  auto li = load_instance(instance_path);
  rep.set("digest", li.digest);
  add_graph_summary(rep, li.g);
  return 0;
}

int cmd_check_td(const std::string& instance_path, const std::string& td_path, int budget,
                 RunReport& rep) {
  auto li = load_instance(instance_path);
  rep.set("digest", li.digest);
  add_graph_summary(rep, li.g);
  auto td = qpsoc::parse_td(read_file(td_path));
  rep.set("bags", td.bags.size());
  auto validity = qpsoc::validate_td(li.g, td);
  rep.set("valid", validity.ok());
  if (!validity.ok()) {
    rep.set("detail", validity.detail);
    return 1;
  }
  auto ws = qpsoc::width_and_spread(td);
  auto cond = qpsoc::check_conditions(li.g, td, budget);
  rep.set("width", ws.width);
  rep.set("max_plus_spread", cond.max_plus_spread);
  rep.set("C1", cond.c1);
  rep.set("C2", cond.c2);
  rep.set("C3", cond.c3);
  if (!cond.all()) rep.set("detail", cond.detail);
  return 0;
}

int cmd_relax(const std::string& instance_path, int level,
              const std::optional<std::string>& out_path, RunReport& rep) {
  auto li = load_instance(instance_path);
  rep.set("digest", li.digest);
  add_graph_summary(rep, li.g);
  rep.set("level", level);
  auto rel = qpsoc::hierarchy(li.g, level);
  rep.set("perspective_systems", rel.perspectives.size());
  auto model = qpsoc::assemble(li.qp, qpsoc::to_system(rel));
  add_model_summary(rep, model);
  if (out_path) {
    write_file(*out_path, qpsoc::export_model(model));
    rep.set("out", *out_path);
  }
  return 0;
}

int cmd_exact(const std::string& instance_path, const std::optional<std::string>& td_path,
              const std::string& strategy, int budget, std::optional<int> fallback_level,
              const std::optional<std::string>& out_path, RunReport& rep) {
  auto li = load_instance(instance_path);
  rep.set("digest", li.digest);
  add_graph_summary(rep, li.g);
  qpsoc::ConicModel model;
  try {
    auto out = run_exact_pipeline(li, td_path, strategy, budget);
    rep.set("mode", "exact");
    add_td_summary(rep, out, budget);
    model = std::move(out.model);
  } catch (const RefusalError& e) {
    if (!fallback_level) {
      rep.set("error", e.what());
      return 1;
    }
    rep.set("refusal", e.what());
    rep.set("mode", "hierarchy-fallback");
    rep.set("level", *fallback_level);
    model = qpsoc::assemble(li.qp, qpsoc::to_system(qpsoc::hierarchy(li.g, *fallback_level)));
  }
  add_model_summary(rep, model);
  if (out_path) {
    write_file(*out_path, qpsoc::export_model(model));
    rep.set("out", *out_path);
  }
  return 0;
}

int cmd_solve(const std::string& model_path, const std::string& adapter_name, RunReport& rep) {
  auto text = read_file(model_path);
  rep.set("digest", fnv1a_digest(text));
  auto model = qpsoc::import_model(text);
  add_model_summary(rep, model);
  auto adapter = qpsoc::make_adapter(adapter_name);
  rep.set("adapter", adapter->name());
  if (!adapter->available())
    throw std::runtime_error("adapter " + adapter->name() + " unavailable");
  auto r = qpsoc::solve(model, *adapter);
  rep.set("status", qpsoc::status_name(r.status));
  if (r.status == SolveStatus::optimal) rep.set("bound", r.objective);
  for (const auto& [k, v] : r.stats) rep.set("stat:" + k, v);
  return r.status == SolveStatus::numerical_limit ? 1 : 0;
}

int cmd_oracle(const std::string& instance_path, double grid_step, RunReport& rep) {
  auto li = load_instance(instance_path);
  rep.set("digest", li.digest);
  add_graph_summary(rep, li.g);
  qpsoc::OracleOptions opts;
  opts.grid_step = grid_step;
  auto r = qpsoc::global_min(li.qp, opts);
  rep.set("oracle", r.value);
  rep.set("oracle_mode", qpsoc::oracle_mode_name(r.mode));
  if (r.grid_step) rep.set("grid_step", *r.grid_step);
  std::string argmin;
  for (double z : r.argmin) argmin += (argmin.empty() ? "" : " ") + fmt_real(z);
  rep.set("argmin", argmin);
  return 0;
}

int cmd_compare(const std::string& instance_path, std::optional<int> level,
                const std::optional<std::string>& td_path, const std::string& strategy, int budget,
                std::optional<int> fallback_level, const std::string& adapter_name,
                double grid_step, std::optional<double> assert_gap, RunReport& rep) {
  auto li = load_instance(instance_path);
  rep.set("digest", li.digest);
  add_graph_summary(rep, li.g);

  qpsoc::ConicModel model;
  if (level) {
    rep.set("mode", "hierarchy");
    rep.set("level", *level);
    model = qpsoc::assemble(li.qp, qpsoc::to_system(qpsoc::hierarchy(li.g, *level)));
  } else {
    try {
      auto out = run_exact_pipeline(li, td_path, strategy, budget);
      rep.set("mode", "exact");
      add_td_summary(rep, out, budget);
      model = std::move(out.model);
    } catch (const RefusalError& e) {
      if (!fallback_level) {
        rep.set("error", e.what());
        return 1;
      }
      rep.set("refusal", e.what());
      rep.set("mode", "hierarchy-fallback");
      rep.set("level", *fallback_level);
      model = qpsoc::assemble(li.qp, qpsoc::to_system(qpsoc::hierarchy(li.g, *fallback_level)));
    }
  }
  add_model_summary(rep, model);

  double bound = solve_bound(model, adapter_name, rep);
  qpsoc::OracleOptions opts;
  opts.grid_step = grid_step;
  auto oracle = qpsoc::global_min(li.qp, opts);
  rep.set("oracle", oracle.value);
  rep.set("oracle_mode", qpsoc::oracle_mode_name(oracle.mode));
  double gap = oracle.value - bound;
  rep.set("gap", gap);

  if (gap < -1e-6) {
    rep.set("error", "bound exceeds the oracle value; the relaxation is not valid");
    return 1;
  }
  if (assert_gap && gap > *assert_gap) {
    rep.set("error", "gap " + fmt_real(gap) + " above the asserted " + fmt_real(*assert_gap));
    return 1;
  }
  return 0;
}

int cmd_witness(RunReport& rep) {
  auto w = qpsoc::witness_compare_sdp();
  rep.set("lhs", w.lhs);
  rep.set("rhs", w.rhs);
  rep.set("mccormick_ok", w.mccormick_ok);
  rep.set("triangle_ok", w.triangle_ok);
  rep.set("ldlt_max_error", w.ldlt_max_error);
  rep.set("d_nonnegative", w.d_nonnegative);
  for (int k = 0; k < 3; ++k)
    rep.set("extended_triangle_first[" + std::to_string(k) + "]", w.extended_triangle_first[k]);
  for (int k = 0; k < 3; ++k)
    rep.set("extended_triangle_second[" + std::to_string(k) + "]", w.extended_triangle_second[k]);
  bool ok = w.mccormick_ok && w.triangle_ok && w.d_nonnegative && w.ldlt_max_error <= 1e-12 &&
            w.rhs > w.lhs;
  rep.set("separated", ok);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"second-order-cone relaxations and exact formulations for box-constrained QPs"};
  app.require_subcommand(1);
  app.fallthrough();
  bool as_json = false;
  app.add_flag("--json", as_json, "print the report as one JSON object");

  std::string instance_path, td_path_str, model_path, out_path_str;
  std::string strategy = "min-degree";
  std::string adapter_name;
  int level = 1;
  int budget = qpsoc::kDefaultBudget;
  int fallback_level_val = 0;
  double grid_step = 1e-3;
  double assert_gap_val = 0.0;

  auto* graph_cmd = app.add_subcommand("graph", "summarize the instance graph");
  graph_cmd->add_option("instance", instance_path)->required();

  auto* check_cmd = app.add_subcommand("check-td", "validate a tree decomposition");
  check_cmd->add_option("instance", instance_path)->required();
  check_cmd->add_option("td", td_path_str)->required();
  check_cmd->add_option("--budget", budget, "width/spread budget");

  auto* relax_cmd = app.add_subcommand("relax", "build the level-r relaxation");
  relax_cmd->add_option("instance", instance_path)->required();
  relax_cmd->add_option("--level", level, "hierarchy level r >= 1")->required();
  relax_cmd->add_option("--out", out_path_str, "write the model JSON here");

  auto* exact_cmd = app.add_subcommand("exact", "build the exact block formulation");
  exact_cmd->add_option("instance", instance_path)->required();
  auto* exact_td = exact_cmd->add_option("--td", td_path_str, "tree decomposition JSON");
  exact_cmd->add_option("--strategy", strategy, "acyclic|cycle|vertex-cover|min-degree");
  exact_cmd->add_option("--budget", budget, "width/spread budget");
  auto* exact_fb = exact_cmd->add_option("--fallback-level", fallback_level_val,
                                         "hierarchy level to use when refused");
  exact_cmd->add_option("--out", out_path_str, "write the model JSON here");

  auto* solve_cmd = app.add_subcommand("solve", "solve a model JSON through an adapter");
  solve_cmd->add_option("model", model_path)->required();
  solve_cmd->add_option("--adapter", adapter_name, "null|cvxopt|clarabel (default: env, cvxopt)");

  auto* oracle_cmd = app.add_subcommand("oracle", "brute-force the global minimum");
  oracle_cmd->add_option("instance", instance_path)->required();
  oracle_cmd->add_option("--grid-step", grid_step, "grid step for coupled plus loops");

  auto* compare_cmd = app.add_subcommand("compare", "solve a formulation and report the oracle gap");
  compare_cmd->add_option("instance", instance_path)->required();
  auto* compare_level = compare_cmd->add_option("--level", level, "compare the level-r relaxation");
  auto* compare_td = compare_cmd->add_option("--td", td_path_str, "tree decomposition JSON");
  compare_cmd->add_option("--strategy", strategy, "td construction strategy");
  compare_cmd->add_option("--budget", budget, "width/spread budget");
  auto* compare_fb = compare_cmd->add_option("--fallback-level", fallback_level_val,
                                             "hierarchy level to use when refused");
  compare_cmd->add_option("--adapter", adapter_name, "solver adapter");
  compare_cmd->add_option("--grid-step", grid_step, "oracle grid step");
  auto* compare_ag = compare_cmd->add_option("--assert-gap", assert_gap_val,
                                             "exit nonzero when gap exceeds this");

  auto* witness_cmd = app.add_subcommand("witness", "run the SDP-comparison fixture");

  CLI11_PARSE(app, argc, argv);

  RunReport rep;
  std::string command_echo;
  for (int k = 0; k < argc; ++k) command_echo += (k ? " " : "") + std::string(argv[k]);
  rep.set("command", command_echo);

  auto started = std::chrono::steady_clock::now();
  int rc = 1;
  try {
    if (graph_cmd->parsed()) {
      rc = cmd_graph(instance_path, rep);
    } else if (check_cmd->parsed()) {
      rc = cmd_check_td(instance_path, td_path_str, budget, rep);
    } else if (relax_cmd->parsed()) {
      rc = cmd_relax(instance_path, level,
                     out_path_str.empty() ? std::nullopt : std::optional(out_path_str), rep);
    } else if (exact_cmd->parsed()) {
      rc = cmd_exact(instance_path,
                     *exact_td ? std::optional(td_path_str) : std::nullopt, strategy, budget,
                     *exact_fb ? std::optional(fallback_level_val) : std::nullopt,
                     out_path_str.empty() ? std::nullopt : std::optional(out_path_str), rep);
    } else if (solve_cmd->parsed()) {
      rc = cmd_solve(model_path, adapter_name, rep);
    } else if (oracle_cmd->parsed()) {
      rc = cmd_oracle(instance_path, grid_step, rep);
    } else if (compare_cmd->parsed()) {
      rc = cmd_compare(instance_path, *compare_level ? std::optional(level) : std::nullopt,
                       *compare_td ? std::optional(td_path_str) : std::nullopt, strategy, budget,
                       *compare_fb ? std::optional(fallback_level_val) : std::nullopt,
                       adapter_name, grid_step,
                       *compare_ag ? std::optional(assert_gap_val) : std::nullopt, rep);
    } else if (witness_cmd->parsed()) {
      rc = cmd_witness(rep);
    }
  } catch (const std::exception& e) {
    rep.set("error", e.what());
    rc = 1;
  }
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  rep.set("wall_time_s", wall);
  rep.print(as_json);
  return rc;
}
