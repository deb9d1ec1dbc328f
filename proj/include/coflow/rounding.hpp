#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coflow/lp.hpp"

namespace coflow {

enum class RoundingMode { Randomized, Deterministic };

// eta = epsilon (randomized) or epsilon/2 (deterministic).
Rat eta_from_epsilon(const Rat& epsilon, RoundingMode mode);

struct AssignedFlow {
  FlowKey key;
  int core = 0;
  int interval = 0;
  Rat priority;               // t_ijk: true left endpoint of I_l
  std::uint64_t tie_rank = 0; // secondary priority; 0 in deterministic mode
};

// Per-flow (core, interval) choice; flows are in FlowSetView order, so the
// vector index doubles as the total-order rank.
struct Assignment {
  RoundingMode mode = RoundingMode::Deterministic;
  std::uint64_t seed = 0;
  Rat epsilon;
  Rat eta;
  std::vector<AssignedFlow> flows;
};

// Assignment state during derandomization: entry f is the fixed
// (core, interval) of flow f, or empty while still fractional.
using PartialState = std::vector<std::optional<std::pair<int, int>>>;

// Precomputed per-flow supports and competitor sets shared by the
// estimators. Probabilities are renormalized to sum to one per flow.
class EstimatorContext {
 public:
  struct Candidate {
    int core = 0;
    int interval = 0;
    double probability = 0.0;
    double y = 0.0;
  };

  EstimatorContext(const LpModel& model, const LpSolution& sol);

  const LpModel& model() const { return *model_; }
  int num_flows() const { return static_cast<int>(supports_.size()); }
  const std::vector<Candidate>& support(int f) const { return supports_[f]; }
  const std::vector<int>& neighbors(int f) const { return neighbors_[f]; }

  // Conditional-expectation completion estimate for flow f placed on
  // (core, interval): the shared body of the D (f unassigned) and E
  // (f assigned) estimators.
  double completion_estimate(const PartialState& state, int f, int core,
                             int interval) const;

  double speed(int p) const { return speeds_[p - 1]; }
  double demand(int f) const { return demand_[f]; }
  double weight_of_coflow(int k) const { return weights_[k - 1]; }

  // y_{f,p,t}|I_t| summed over t < l (cumulative) and at t = l.
  double y_before(int f, int p, int l) const {
    return ycum_[f][slot(p, l)];
  }
  double y_at(int f, int p, int l) const { return yat_[f][slot(p, l)]; }
  double base(int f, int p, int l) const;

 private:
  int slot(int p, int l) const { return (p - 1) * (levels_) + l; }

  const LpModel* model_;
  int levels_ = 0;  // L + 1
  std::vector<std::vector<Candidate>> supports_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<double>> ycum_, yat_;
  std::vector<double> speeds_, demand_, weights_;
};

// Spec-level estimator entry points (reference forms).
double estimator_D(const EstimatorContext& ctx, const PartialState& state,
                   int f, int core, int interval);
double estimator_E(const EstimatorContext& ctx, const PartialState& state,
                   int f);
double cond_exp_total_wct(const EstimatorContext& ctx,
                          const PartialState& state);
double cond_exp_makespan(const EstimatorContext& ctx,
                         const PartialState& state);

struct EstimatorStep {
  FlowKey flow;
  double parent_value = 0.0;  // aggregate before fixing this flow
  struct Child {
    int core = 0;
    int interval = 0;
    double probability = 0.0;
    double value = 0.0;
  };
  std::vector<Child> children;
  int chosen_core = 0;
  int chosen_interval = 0;
  double chosen_value = 0.0;
  double weighted_average = 0.0;
};

struct EstimatorReport {
  std::vector<EstimatorStep> steps;
  double final_value = 0.0;
};

// Algorithm-1 style randomized rounding: independent draws from the LP
// marginals plus a uniform tie-break priority per flow.
Assignment sample_assignment(const LpModel& model, const LpSolution& sol,
                             std::uint64_t seed);

// Greedy conditional-expectation derandomization, flows in total order.
std::pair<Assignment, EstimatorReport> derandomize_wct(const LpModel& model,
                                                       const LpSolution& sol);
std::pair<Assignment, EstimatorReport> derandomize_makespan(
    const LpModel& model, const LpSolution& sol);

// Diagnostic only: the unconditioned expected completion of each coflow
// (or the plain maximum over flows) evaluated from the fractional
// solution before any flow is fixed.
std::vector<double> initial_expectation_report(const EstimatorContext& ctx);

std::string assignment_to_json_text(const Assignment& a, int N);
Assignment assignment_from_json_text(const std::string& text,
                                     const CoflowInstance& inst);
void save_assignment(const Assignment& a, int N, const std::string& path);
Assignment load_assignment(const std::string& path,
                           const CoflowInstance& inst);
std::string estimator_report_to_jsonl(const EstimatorReport& report, int N);

}  // namespace coflow
