#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "coflow/instance.hpp"
#include "coflow/lp.hpp"
#include "coflow/oracle.hpp"
#include "coflow/rounding.hpp"
#include "coflow/simulator.hpp"
#include "coflow/timegrid.hpp"

namespace {

using coflow::Rat;
using json = nlohmann::ordered_json;

constexpr const char* kToolVersion = "0.1.0";

int log_level() {
  static int level = [] {
    const char* env = std::getenv("COFLOWSCHED_LOG");
    if (!env) return 1;
    std::string v(env);
    if (v == "debug") return 2;
    if (v == "warn" || v == "error") return 0;
    return 1;  // info
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[coflowsched] " << msg << "\n";
}
void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[coflowsched:debug] " << msg << "\n";
}

// Thrown for invariant violations discovered in produced artifacts; maps to
// exit code 2, while input/validation problems map to exit code 1.
struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string objective = "wct";
  std::string mode = "det";
  std::string epsilon = "1";
  std::uint64_t seed = 0;
  std::string arithmetic = "exact";

  coflow::Objective objective_enum() const {
    return objective == "makespan" ? coflow::Objective::Makespan
                                   : coflow::Objective::Wct;
  }
  coflow::RoundingMode mode_enum() const {
    return mode == "rand" ? coflow::RoundingMode::Randomized
                          : coflow::RoundingMode::Deterministic;
  }
  Rat epsilon_rat() const {
    Rat e = coflow::parse_decimal(epsilon);
    if (e <= 0) throw coflow::ValidationError("epsilon must be positive", {});
    return e;
  }
  json to_json() const {
    json c;
    c["objective"] = objective;
    c["mode"] = mode;
    c["epsilon"] = epsilon;
    c["eta"] = coflow::rat_to_string(
        coflow::eta_from_epsilon(epsilon_rat(), mode_enum()));
    c["seed"] = seed;
    c["arithmetic"] = arithmetic;
    return c;
  }
};

void add_config_flags(CLI::App* cmd, RunConfig& cfg, bool with_arith = false) {
  cmd->add_option("--objective", cfg.objective, "wct or makespan")
      ->check(CLI::IsMember({"wct", "makespan"}));
  cmd->add_option("--mode", cfg.mode, "det or rand")
      ->check(CLI::IsMember({"det", "rand"}));
  cmd->add_option("--epsilon", cfg.epsilon,
                  "performance parameter (decimal or a/b)");
  cmd->add_option("--seed", cfg.seed, "random seed");
  if (with_arith) {
    cmd->add_option("--arithmetic", cfg.arithmetic,
                    "exact (rational) or float simulation")
        ->check(CLI::IsMember({"exact", "float"}));
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw coflow::ParseError("file not found: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

// Artifacts carry the RunConfig; payload key names the producing stage.
std::string wrap_artifact(const RunConfig& cfg, const std::string& kind,
                          const json& payload) {
  json doc;
  doc["tool"] = "coflowsched";
  doc["version"] = kToolVersion;
  doc["config"] = cfg.to_json();
  doc[kind] = payload;
  return doc.dump(2) + "\n";
}

// Accepts either a bare instance file or a wrapped gen artifact.
coflow::CoflowInstance read_instance_file(const std::string& path) {
  std::string text = read_file(path);
  json doc = json::parse(text, nullptr, true);
  if (doc.is_object() && doc.contains("instance")) {
    return coflow::instance_from_json_text(doc["instance"].dump());
  }
  return coflow::instance_from_json_text(text);
}

json unwrap(const std::string& path, const std::string& kind) {
  json doc = json::parse(read_file(path));
  if (doc.is_object() && doc.contains(kind)) return doc[kind];
  return doc;
}

// Rebuilds an LpSolution from a solution artifact against a freshly built
// model so downstream stages can reuse a solved file.
coflow::LpSolution load_solution_payload(const coflow::LpModel& model,
                                         const json& payload) {
  coflow::LpSolution sol;
  sol.kind = model.kind;
  sol.objective = payload.at("objective").get<double>();
  sol.y.assign(model.vars.size(), 0.0);
  std::map<std::tuple<int, int, int, int, int>, int> index;
  for (std::size_t v = 0; v < model.vars.size(); ++v) {
    const coflow::VarKey& k = model.vars[v];
    index[{k.flow.src, k.flow.dst - model.instance.N, k.flow.coflow, k.core,
           k.interval}] = static_cast<int>(v);
  }
  for (const auto& e : payload.at("y")) {
    auto it = index.find({e.at("i").get<int>(), e.at("j").get<int>(),
                          e.at("k").get<int>(), e.at("p").get<int>(),
                          e.at("l").get<int>()});
    if (it == index.end()) {
      throw InvariantViolation(
          "solution references a variable absent from the model (check "
          "objective/epsilon/mode)");
    }
    sol.y[it->second] = e.at("value").get<double>();
  }
  // Recompute completion expressions from y.
  sol.flow_completion.assign(model.flows.all.size(), 0.0);
  for (std::size_t f = 0; f < model.flows.all.size(); ++f) {
    double c = 0.0;
    for (int v : model.flow_vars[f]) {
      const coflow::VarKey& key = model.vars[v];
      c += sol.y[v] * coflow::f_coefficient(model.instance.speed(key.core),
                                            model.flows.all[f].size,
                                            key.interval, model.grid);
    }
    sol.flow_completion[f] = c;
  }
  if (model.kind == coflow::Objective::Wct) {
    sol.coflow_completion.assign(model.instance.num_coflows(), 0.0);
    for (std::size_t f = 0; f < model.flows.all.size(); ++f) {
      int k = model.flows.all[f].key.coflow;
      sol.coflow_completion[k - 1] =
          std::max(sol.coflow_completion[k - 1], sol.flow_completion[f]);
    }
  } else {
    sol.cmax = payload.contains("Cmax") ? payload.at("Cmax").get<double>()
                                        : sol.objective;
  }
  return sol;
}

coflow::LpModel build_model_for(const coflow::CoflowInstance& inst,
                                const RunConfig& cfg) {
  Rat eta = coflow::eta_from_epsilon(cfg.epsilon_rat(), cfg.mode_enum());
  coflow::IntervalGrid grid =
      coflow::IntervalGrid::build(coflow::time_horizon(inst), eta);
  return cfg.objective_enum() == coflow::Objective::Wct
             ? coflow::build_wct_lp(inst, grid)
             : coflow::build_makespan_lp(inst, grid);
}

int cmd_gen(const std::string& out_path, const coflow::GenParams& params,
            const RunConfig& cfg) {
  coflow::CoflowInstance inst = coflow::generate_random(params);
  json payload = json::parse(coflow::instance_to_json_text(inst));
  write_file(out_path, wrap_artifact(cfg, "instance", payload));
  log_info("wrote instance with " + std::to_string(inst.num_flows()) +
           " flows to " + out_path);
  return 0;
}

int cmd_lp(const std::string& inst_path, const std::string& out_path,
           const std::string& export_path, const RunConfig& cfg) {
  coflow::CoflowInstance inst = read_instance_file(inst_path);
  coflow::LpModel model = build_model_for(inst, cfg);
  log_debug("model: " + std::to_string(model.num_y()) + " y vars, " +
            std::to_string(model.problem.rows.size()) + " rows");
  if (!export_path.empty()) {
    coflow::export_lp_text(model, export_path);
    log_info("exported LP text to " + export_path);
  }
  coflow::LpSolution sol = coflow::solve(model);
  coflow::FeasibilityAudit audit = coflow::audit_solution(model, sol);
  if (!audit.ok) {
    throw InvariantViolation("solved LP fails the feasibility audit");
  }
  if (!out_path.empty()) {
    json payload = json::parse(coflow::solution_to_json_text(model, sol));
    write_file(out_path, wrap_artifact(cfg, "solution", payload));
  }
  std::cout << "objective " << sol.objective << "\n";
  log_info("simplex iterations: " + std::to_string(sol.iterations) +
           (sol.exact_fallback ? " (exact fallback)" : ""));
  return 0;
}

int cmd_schedule(const std::string& inst_path, const std::string& sol_path,
                 const std::string& out_path, const RunConfig& cfg) {
  coflow::CoflowInstance inst = read_instance_file(inst_path);
  coflow::LpModel model = build_model_for(inst, cfg);
  coflow::LpSolution sol =
      sol_path.empty()
          ? coflow::solve(model)
          : load_solution_payload(model, unwrap(sol_path, "solution"));
  coflow::Assignment a;
  if (cfg.mode_enum() == coflow::RoundingMode::Deterministic) {
    auto [assignment, report] = model.kind == coflow::Objective::Wct
                                    ? coflow::derandomize_wct(model, sol)
                                    : coflow::derandomize_makespan(model, sol);
    a = std::move(assignment);
    log_info("final estimator value " + std::to_string(report.final_value));
  } else {
    a = coflow::sample_assignment(model, sol, cfg.seed);
  }
  a.epsilon = cfg.epsilon_rat();
  json payload = json::parse(coflow::assignment_to_json_text(a, inst.N));
  write_file(out_path, wrap_artifact(cfg, "assignment", payload));
  log_info("wrote assignment for " + std::to_string(a.flows.size()) +
           " flows to " + out_path);
  return 0;
}

int cmd_simulate(const std::string& inst_path, const std::string& asg_path,
                 const std::string& out_path, const std::string& trace_path,
                 const RunConfig& cfg) {
  coflow::CoflowInstance inst = read_instance_file(inst_path);
  coflow::Assignment a = coflow::assignment_from_json_text(
      unwrap(asg_path, "assignment").dump(), inst);
  coflow::Schedule sched = coflow::list_schedule(inst, a);
  coflow::ScheduleAudit audit = coflow::validate_schedule(sched, inst, a);
  if (!audit.ok()) {
    for (const auto& issue : audit.issues) {
      std::cerr << "invariant violation at t=" << coflow::rat_to_string(
                       issue.time) << ": " << issue.message << "\n";
    }
    throw InvariantViolation("simulated schedule failed validation");
  }
  if (!out_path.empty()) {
    json payload = json::parse(coflow::schedule_summary_json(sched, inst));
    write_file(out_path, wrap_artifact(cfg, "schedule", payload));
  }
  if (!trace_path.empty()) {
    write_file(trace_path, coflow::trace_to_jsonl(sched, inst.N));
  }
  std::cout << "wct " << coflow::rat_to_string(sched.wct) << "\nmakespan "
            << coflow::rat_to_string(sched.makespan) << "\n";
  return 0;
}

int cmd_verify(const std::string& inst_path, const std::string& sol_path,
               const std::string& asg_path, const RunConfig& cfg) {
  coflow::CoflowInstance inst = read_instance_file(inst_path);
  std::cout << "instance: ok (" << inst.num_flows() << " flows)\n";

  coflow::LpModel model = build_model_for(inst, cfg);
  if (!sol_path.empty()) {
    coflow::LpSolution sol =
        load_solution_payload(model, unwrap(sol_path, "solution"));
    coflow::FeasibilityAudit audit = coflow::audit_solution(model, sol);
    std::cout << "solution: max probability error "
              << audit.max_probability_error << ", max capacity excess "
              << audit.max_capacity_excess << "\n";
    if (!audit.ok) throw InvariantViolation("solution fails feasibility");
    std::cout << "solution: ok\n";
  }
  if (!asg_path.empty()) {
    coflow::Assignment a = coflow::assignment_from_json_text(
        unwrap(asg_path, "assignment").dump(), inst);
    coflow::Schedule sched = coflow::list_schedule(inst, a);
    coflow::ScheduleAudit audit = coflow::validate_schedule(sched, inst, a);
    if (!audit.ok()) {
      for (const auto& issue : audit.issues) {
        std::cerr << "t=" << coflow::rat_to_string(issue.time) << ": "
                  << issue.message << "\n";
      }
      throw InvariantViolation("schedule fails validation");
    }
    std::cout << "schedule: ok (wct " << coflow::rat_to_string(sched.wct)
              << ", makespan " << coflow::rat_to_string(sched.makespan)
              << ")\n";
  }
  return 0;
}

int cmd_report(int n_instances, int jobs, bool zero_release,
               const std::string& format, const std::string& out_path,
               const RunConfig& cfg) {
  coflow::HarnessConfig hc;
  hc.n_instances = n_instances;
  hc.base_seed = cfg.seed;
  hc.objective = cfg.objective_enum();
  hc.mode = cfg.mode_enum();
  hc.epsilon = cfg.epsilon_rat();
  hc.zero_release = zero_release;
  hc.jobs = jobs;
  std::vector<coflow::RatioReport> reports = coflow::ratio_report(hc);
  coflow::RatioAggregate agg = coflow::aggregate_reports(reports);

  std::string text = format == "json" ? coflow::reports_to_json(reports)
                                      : coflow::reports_to_csv(reports);
  if (!out_path.empty()) {
    if (format == "json") {
      json payload = json::parse(text);
      write_file(out_path, wrap_artifact(cfg, "report", payload));
    } else {
      write_file(out_path, text);
    }
  } else {
    std::cout << text;
  }
  log_info("max ratio " + std::to_string(agg.max_ratio) + ", mean " +
           std::to_string(agg.mean_ratio) + ", failures " +
           std::to_string(agg.failures) + "/" + std::to_string(agg.count));
  return agg.failures == 0 ? 0 : 2;
}

int cmd_demo() {
  coflow::CoflowInstance inst;
  inst.N = 1;
  inst.speeds = {Rat(1)};
  coflow::Coflow c;
  c.weight = 1;
  c.release = 0;
  c.flows.push_back({{1, 2, 1}, 2});
  inst.coflows.push_back(c);
  inst = coflow::validate(inst);

  // epsilon = 2 in deterministic mode gives eta = 1.
  coflow::PipelineResult pr = coflow::run_pipeline(
      inst, coflow::Objective::Wct, coflow::RoundingMode::Deterministic,
      Rat(2));
  const coflow::AssignedFlow& af = pr.assignment.flows.at(0);
  double ratio = pr.alg_objective / pr.lp_objective;
  std::printf("LP objective: %.6g\n", pr.lp_objective);
  std::printf("assignment: flow (i=1, j=1, k=1) -> core p=%d, interval l=%d\n",
              af.core, af.interval);
  std::printf("simulated completion: %.6g\n", pr.alg_objective);
  std::printf("ratio: %.3f\n", ratio);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preemptive coflow scheduling on heterogeneous cores: "
               "LP relaxation, rounding, simulation and ratio harness"};
  app.require_subcommand(1);

  RunConfig cfg;

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a random instance");
  std::string gen_out = "instance.json";
  coflow::GenParams gp;
  std::vector<std::int64_t> speed_set = {1, 2};
  gen->add_option("output", gen_out, "output instance file")->required();
  gen->add_option("--ports", gp.N, "ports per side");
  gen->add_option("--cores", gp.m, "number of network cores");
  gen->add_option("--coflows", gp.n, "number of coflows");
  gen->add_option("--speeds", speed_set, "core speed pool");
  gen->add_option("--size-min", gp.size_min, "minimum flow size");
  gen->add_option("--size-max", gp.size_max, "maximum flow size");
  gen->add_option("--release-max", gp.release_max, "maximum release time");
  gen->add_option("--weight-max", gp.weight_max, "maximum coflow weight");
  add_config_flags(gen, cfg);

  // lp
  auto* lp = app.add_subcommand("lp", "Build and solve the relaxation");
  std::string lp_in, lp_out, lp_export;
  lp->add_option("instance", lp_in, "instance file")->required();
  lp->add_option("-o,--output", lp_out, "solution artifact");
  lp->add_option("--export-lp", lp_export, "write LP text format");
  add_config_flags(lp, cfg);

  // schedule
  auto* sched = app.add_subcommand("schedule", "Round a solution");
  std::string sc_in, sc_sol, sc_out = "assignment.json";
  sched->add_option("instance", sc_in, "instance file")->required();
  sched->add_option("--solution", sc_sol, "solved LP artifact (else re-solve)");
  sched->add_option("-o,--output", sc_out, "assignment artifact");
  add_config_flags(sched, cfg);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Execute an assignment");
  std::string sm_in, sm_asg, sm_out, sm_trace;
  sim->add_option("instance", sm_in, "instance file")->required();
  sim->add_option("assignment", sm_asg, "assignment artifact")->required();
  sim->add_option("-o,--output", sm_out, "schedule summary artifact");
  sim->add_option("--trace", sm_trace, "event trace (JSONL)");
  add_config_flags(sim, cfg, /*with_arith=*/true);

  // verify
  auto* ver = app.add_subcommand("verify", "Run the invariant suite");
  std::string vf_in, vf_sol, vf_asg;
  ver->add_option("instance", vf_in, "instance file")->required();
  ver->add_option("--solution", vf_sol, "solution artifact");
  ver->add_option("--assignment", vf_asg, "assignment artifact");
  add_config_flags(ver, cfg);

  // report
  auto* rep = app.add_subcommand("report", "Batch ratio harness");
  int rp_n = 100, rp_jobs = 1;
  bool rp_zero = false;
  std::string rp_format = "csv", rp_out;
  rep->add_option("--n-instances", rp_n, "number of instances");
  rep->add_option("--jobs", rp_jobs, "worker pool size");
  rep->add_flag("--zero-release", rp_zero, "force all releases to 0");
  rep->add_option("--format", rp_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  rep->add_option("-o,--output", rp_out, "report file (default stdout)");
  add_config_flags(rep, cfg);

  // demo
  app.add_subcommand("demo", "Single-flow worked example end-to-end");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gp.speed_set = speed_set;
      gp.seed = cfg.seed;
      return cmd_gen(gen_out, gp, cfg);
    }
    if (lp->parsed()) return cmd_lp(lp_in, lp_out, lp_export, cfg);
    if (sched->parsed()) return cmd_schedule(sc_in, sc_sol, sc_out, cfg);
    if (sim->parsed()) return cmd_simulate(sm_in, sm_asg, sm_out, sm_trace, cfg);
    if (ver->parsed()) return cmd_verify(vf_in, vf_sol, vf_asg, cfg);
    if (rep->parsed()) {
      return cmd_report(rp_n, rp_jobs, rp_zero, rp_format, rp_out, cfg);
    }
    return cmd_demo();
  } catch (const InvariantViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const coflow::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& issue : e.issues()) std::cerr << "  - " << issue << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
