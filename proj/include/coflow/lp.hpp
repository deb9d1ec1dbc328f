#pragma once

#include <string>
#include <vector>

#include "coflow/instance.hpp"
#include "coflow/simplex.hpp"
#include "coflow/timegrid.hpp"

namespace coflow {

enum class Objective { Wct, Makespan };

// One y variable: flow (i,j,k) transmitted on core p during interval l.
// Only interval indices eligible for the flow's release exist.
struct VarKey {
  FlowKey flow;
  int core = 0;
  int interval = 0;
};

// Coefficient multiplying y_{ijkpl} in the flow-completion expression:
// (s_p/d * notational_left(l) + 1/2) * |I_l|.
double f_coefficient(const Rat& speed, std::int64_t demand, int interval,
                     const IntervalGrid& grid);
Rat f_coefficient_exact(const Rat& speed, std::int64_t demand, int interval,
                        const IntervalGrid& grid);

// Fraction of the flow moved by one unit of y: s_p * |I_l| / d. This is
// also the rounding probability coefficient.
double probability_coefficient(const Rat& speed, std::int64_t demand,
                               int interval, const IntervalGrid& grid);

struct LpModel {
  Objective kind = Objective::Wct;
  CoflowInstance instance;
  FlowSetView flows;
  IntervalGrid grid;

  std::vector<VarKey> vars;                  // y columns, in index order
  std::vector<std::vector<int>> flow_vars;   // per flow: indices into vars
  int num_aux = 0;  // n coflow-completion vars (Wct) or 1 C_max (Makespan)

  SimplexProblem<double> problem;

  int demand_rows = 0;
  int input_capacity_rows = 0;
  int output_capacity_rows = 0;
  int linking_rows = 0;

  int num_y() const { return static_cast<int>(vars.size()); }
  int aux_var(int k) const { return num_y() + k - 1; }  // C_k / C_max
};

LpModel build_wct_lp(const CoflowInstance& inst, const IntervalGrid& grid);
LpModel build_makespan_lp(const CoflowInstance& inst,
                          const IntervalGrid& grid);

struct LpSolution {
  Objective kind = Objective::Wct;
  double objective = 0.0;
  std::vector<double> y;                 // aligned with model.vars
  std::vector<double> flow_completion;   // C_ijk from Eq-style recompute
  std::vector<double> coflow_completion; // C_k (1-based-1); empty for makespan
  double cmax = 0.0;
  long iterations = 0;
  bool exact_fallback = false;
};

class SolveError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two-phase simplex with Dantzig pricing; on numerical trouble in float
// mode the model is re-solved with exact rational pivoting.
LpSolution solve(const LpModel& model, long max_iterations = 2000000);

// CPLEX-LP text export; variables named y_i_j_k_p_l (dst externalized),
// C_k and Cmax. Throws on an empty model.
void export_lp_text(const LpModel& model, const std::string& path);

struct FeasibilityAudit {
  double max_probability_error = 0.0;  // worst |sum prob - 1| per flow
  double max_capacity_excess = 0.0;    // worst capacity row overshoot
  bool ok = false;
};

FeasibilityAudit audit_solution(const LpModel& model, const LpSolution& sol,
                                double tol = 1e-7);

std::string solution_to_json_text(const LpModel& model, const LpSolution& sol);
void save_solution(const LpModel& model, const LpSolution& sol,
                   const std::string& path);

}  // namespace coflow
