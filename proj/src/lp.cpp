#include "coflow/lp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace coflow {
namespace {

using json = nlohmann::ordered_json;

// Assembles the constraint matrix over either scalar type. Rows appear in
// the order: demand (per flow), input capacity (i, p, l), output capacity
// (j, p, l), completion linking (per flow).
template <class T>
SimplexProblem<T> assemble(const LpModel& model) {
  const CoflowInstance& inst = model.instance;
  const IntervalGrid& grid = model.grid;
  const FlowSetView& flows = model.flows;
  const int F = static_cast<int>(flows.all.size());
  const int m = inst.num_cores();
  const int L = grid.count();
  const int n = inst.num_coflows();
  const int total_vars = model.num_y() + model.num_aux;

  SimplexProblem<T> problem;
  problem.num_vars = total_vars;
  problem.objective.assign(total_vars, T(0));

  auto scalar = [](const Rat& r) -> T {
    if constexpr (std::is_same_v<T, double>)
      return to_double(r);
    else
      return r;
  };

  if (model.kind == Objective::Wct) {
    for (int k = 1; k <= n; ++k)
      problem.objective[model.aux_var(k)] = scalar(inst.coflows[k - 1].weight);
  } else {
    problem.objective[model.aux_var(1)] = T(1);
  }

  // (a) demand rows: sum_{p,l} (s_p |I_l| / d) y = 1
  for (int f = 0; f < F; ++f) {
    typename SimplexProblem<T>::Row row;
    row.rel = Relation::Eq;
    row.rhs = T(1);
    const std::int64_t d = flows.all[f].size;
    for (int col : model.flow_vars[f]) {
      const VarKey& v = model.vars[col];
      Rat c = inst.speed(v.core) * grid.length(v.interval) / Rat(d);
      row.coeffs.push_back({col, scalar(c)});
    }
    problem.rows.push_back(std::move(row));
  }

  // (b)/(c) capacity rows, one per (port, core, interval) even when empty
  std::map<std::tuple<int, int, int>, std::vector<int>> by_src_pl, by_dst_pl;
  for (int col = 0; col < model.num_y(); ++col) {
    const VarKey& v = model.vars[col];
    by_src_pl[{v.flow.src, v.core, v.interval}].push_back(col);
    by_dst_pl[{v.flow.dst, v.core, v.interval}].push_back(col);
  }
  auto push_capacity = [&](int port, bool input) {
    for (int p = 1; p <= m; ++p)
      for (int l = 0; l <= L; ++l) {
        typename SimplexProblem<T>::Row row;
        row.rel = Relation::Le;
        row.rhs = T(1);
        auto& bucket = input ? by_src_pl : by_dst_pl;
        if (auto it = bucket.find({port, p, l}); it != bucket.end())
          for (int col : it->second) row.coeffs.push_back({col, T(1)});
        problem.rows.push_back(std::move(row));
      }
  };
  for (int i = 1; i <= inst.N; ++i) push_capacity(i, true);
  for (int j = inst.N + 1; j <= 2 * inst.N; ++j) push_capacity(j, false);

  // (d) linking rows: C_k - sum f(i,j,k,p,l) y >= 0
  for (int f = 0; f < F; ++f) {
    typename SimplexProblem<T>::Row row;
    row.rel = Relation::Ge;
    row.rhs = T(0);
    const Flow& flow = flows.all[f];
    int aux = model.kind == Objective::Wct ? model.aux_var(flow.key.coflow)
                                           : model.aux_var(1);
    row.coeffs.push_back({aux, T(1)});
    for (int col : model.flow_vars[f]) {
      const VarKey& v = model.vars[col];
      Rat c = f_coefficient_exact(inst.speed(v.core), flow.size, v.interval,
                                  grid);
      row.coeffs.push_back({col, -scalar(c)});
    }
    problem.rows.push_back(std::move(row));
  }
  return problem;
}

LpModel build_model(const CoflowInstance& inst, const IntervalGrid& grid,
                    Objective kind) {
  LpModel model;
  model.kind = kind;
  model.instance = inst;
  model.grid = grid;
  model.flows = FlowSetView::build(inst);
  const int F = static_cast<int>(model.flows.all.size());
  const int m = inst.num_cores();
  const int L = grid.count();

  model.flow_vars.resize(F);
  for (int f = 0; f < F; ++f) {
    const Flow& flow = model.flows.all[f];
    const Rat& release = inst.coflows[flow.key.coflow - 1].release;
    int first = grid.first_eligible(release);
    for (int p = 1; p <= m; ++p)
      for (int l = first; l <= L; ++l) {
        model.flow_vars[f].push_back(model.num_y());
        model.vars.push_back({flow.key, p, l});
      }
  }
  model.num_aux = kind == Objective::Wct ? inst.num_coflows() : 1;
  model.demand_rows = F;
  model.input_capacity_rows = inst.N * m * (L + 1);
  model.output_capacity_rows = inst.N * m * (L + 1);
  model.linking_rows = F;
  model.problem = assemble<double>(model);
  return model;
}

double row_activity(const SimplexProblem<double>::Row& row,
                    const std::vector<double>& x) {
  double a = 0.0;
  for (const auto& [j, v] : row.coeffs) a += v * x[j];
  return a;
}

double worst_residual(const SimplexProblem<double>& problem,
                      const std::vector<double>& x) {
  double worst = 0.0;
  for (const auto& row : problem.rows) {
    double a = row_activity(row, x);
    double viol = 0.0;
    if (row.rel == Relation::Eq)
      viol = std::abs(a - row.rhs);
    else if (row.rel == Relation::Le)
      viol = a - row.rhs;
    else
      viol = row.rhs - a;
    worst = std::max(worst, viol);
  }
  for (double v : x) worst = std::max(worst, -v);
  return worst;
}

}  // namespace

double f_coefficient(const Rat& speed, std::int64_t demand, int interval,
                     const IntervalGrid& grid) {
  return to_double(f_coefficient_exact(speed, demand, interval, grid));
}

Rat f_coefficient_exact(const Rat& speed, std::int64_t demand, int interval,
                        const IntervalGrid& grid) {
  return (speed / Rat(demand) * grid.notational_left(interval) + Rat(1, 2)) *
         grid.length(interval);
}

double probability_coefficient(const Rat& speed, std::int64_t demand,
                               int interval, const IntervalGrid& grid) {
  return to_double(speed * grid.length(interval) / Rat(demand));
}

LpModel build_wct_lp(const CoflowInstance& inst, const IntervalGrid& grid) {
  return build_model(inst, grid, Objective::Wct);
}

LpModel build_makespan_lp(const CoflowInstance& inst,
                          const IntervalGrid& grid) {
  return build_model(inst, grid, Objective::Makespan);
}

LpSolution solve(const LpModel& model, long max_iterations) {
  SimplexResult<double> res = solve_simplex(model.problem, max_iterations);

  bool need_exact = false;
  if (res.status == SimplexStatus::Optimal) {
    if (worst_residual(model.problem, res.x) > 1e-7) need_exact = true;
  } else if (res.status == SimplexStatus::IterationLimit) {
    std::ostringstream os;
    os << "simplex iteration limit " << max_iterations
       << " exceeded (objective " << res.objective << ")";
    throw SolveError(os.str());
  } else {
    need_exact = true;  // the model is feasible by construction
  }

  LpSolution sol;
  sol.kind = model.kind;
  sol.iterations = res.iterations;
  std::vector<double> x;
  if (!need_exact) {
    x = std::move(res.x);
    sol.objective = res.objective;
  } else {
    SimplexProblem<Rat> exact = assemble<Rat>(model);
    SimplexResult<Rat> eres = solve_simplex(exact, max_iterations);
    if (eres.status != SimplexStatus::Optimal)
      throw SolveError("exact fallback failed to reach optimality");
    sol.exact_fallback = true;
    sol.iterations += eres.iterations;
    x.resize(exact.num_vars);
    for (int j = 0; j < exact.num_vars; ++j) x[j] = to_double(eres.x[j]);
    sol.objective = to_double(eres.objective);
  }

  sol.y.assign(x.begin(), x.begin() + model.num_y());
  const int F = static_cast<int>(model.flows.all.size());
  sol.flow_completion.assign(F, 0.0);
  for (int f = 0; f < F; ++f) {
    const Flow& flow = model.flows.all[f];
    double c = 0.0;
    for (int col : model.flow_vars[f])
      c += f_coefficient(model.instance.speed(model.vars[col].core),
                         flow.size, model.vars[col].interval, model.grid) *
           sol.y[col];
    sol.flow_completion[f] = c;
  }
  if (model.kind == Objective::Wct) {
    sol.coflow_completion.resize(model.instance.num_coflows());
    for (int k = 1; k <= model.instance.num_coflows(); ++k)
      sol.coflow_completion[k - 1] = x[model.aux_var(k)];
  } else {
    sol.cmax = x[model.aux_var(1)];
  }
  return sol;
}

void export_lp_text(const LpModel& model, const std::string& path) {
  if (model.num_y() == 0) throw SolveError("cannot export a model with no variables");
  std::ofstream out(path);
  if (!out) throw SolveError("cannot write " + path);

  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto var_name = [&](int col) -> std::string {
    if (col < model.num_y()) {
      const VarKey& v = model.vars[col];
      std::ostringstream os;
      os << "y_" << v.flow.src << "_" << v.flow.dst - model.instance.N << "_"
         << v.flow.coflow << "_" << v.core << "_" << v.interval;
      return os.str();
    }
    if (model.kind == Objective::Makespan) return "Cmax";
    return "C_" + std::to_string(col - model.num_y() + 1);
  };

  out << "\\ interval-indexed coflow scheduling LP\n";
  out << "Minimize\n obj:";
  bool first = true;
  for (int j = 0; j < model.problem.num_vars; ++j) {
    double c = model.problem.objective[j];
    if (c == 0.0) continue;
    out << (first ? " " : " + ") << num(c) << " " << var_name(j);
    first = false;
  }
  out << "\nSubject To\n";
  int r = 0;
  for (const auto& row : model.problem.rows) {
    if (row.coeffs.empty()) {
      ++r;
      continue;
    }
    out << " r" << r++ << ":";
    bool lead = true;
    for (const auto& [j, v] : row.coeffs) {
      if (lead) {
        out << " " << num(v) << " " << var_name(j);
        lead = false;
      } else if (v >= 0) {
        out << " + " << num(v) << " " << var_name(j);
      } else {
        out << " - " << num(-v) << " " << var_name(j);
      }
    }
    out << (row.rel == Relation::Eq ? " = " : row.rel == Relation::Le ? " <= " : " >= ")
        << num(row.rhs) << "\n";
  }
  out << "End\n";
}

FeasibilityAudit audit_solution(const LpModel& model, const LpSolution& sol,
                                double tol) {
  FeasibilityAudit audit;
  const int F = static_cast<int>(model.flows.all.size());
  for (int f = 0; f < F; ++f) {
    double total = 0.0;
    for (int col : model.flow_vars[f]) {
      const VarKey& v = model.vars[col];
      total += probability_coefficient(model.instance.speed(v.core),
                                       model.flows.all[f].size, v.interval,
                                       model.grid) *
               sol.y[col];
    }
    audit.max_probability_error =
        std::max(audit.max_probability_error, std::abs(total - 1.0));
  }
  // Capacity rows sit between the demand and linking blocks.
  const int cap_begin = model.demand_rows;
  const int cap_end = cap_begin + model.input_capacity_rows +
                      model.output_capacity_rows;
  std::vector<double> x(sol.y);
  x.resize(model.problem.num_vars, 0.0);
  for (int r = cap_begin; r < cap_end; ++r) {
    double a = row_activity(model.problem.rows[r], x);
    audit.max_capacity_excess = std::max(audit.max_capacity_excess, a - 1.0);
  }
  audit.ok = audit.max_probability_error <= tol &&
             audit.max_capacity_excess <= tol;
  return audit;
}

std::string solution_to_json_text(const LpModel& model,
                                  const LpSolution& sol) {
  json doc;
  doc["objective"] = sol.objective;
  doc["y"] = json::array();
  for (int col = 0; col < model.num_y(); ++col) {
    if (sol.y[col] == 0.0) continue;
    const VarKey& v = model.vars[col];
    json entry;
    entry["i"] = v.flow.src;
    entry["j"] = v.flow.dst - model.instance.N;
    entry["k"] = v.flow.coflow;
    entry["p"] = v.core;
    entry["l"] = v.interval;
    entry["value"] = sol.y[col];
    doc["y"].push_back(entry);
  }
  if (model.kind == Objective::Wct) {
    json c;
    for (int k = 1; k <= model.instance.num_coflows(); ++k)
      c[std::to_string(k)] = sol.coflow_completion[k - 1];
    doc["C"] = c;
  } else {
    doc["Cmax"] = sol.cmax;
  }
  return doc.dump(2) + "\n";
}

void save_solution(const LpModel& model, const LpSolution& sol,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SolveError("cannot write " + path);
  out << solution_to_json_text(model, sol);
}

}  // namespace coflow
