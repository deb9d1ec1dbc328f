#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coflow/lp.hpp"
#include "coflow/rounding.hpp"
#include "coflow/simulator.hpp"

namespace coflow {

class OracleBudgetExceeded : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exhaustive search over quantized preemptive schedules; exact up to the
// quantum. Flows may migrate cores between quanta. Memoized on
// (time step, remaining sizes) with an expansion budget.
Rat brute_force_opt(const CoflowInstance& inst, Objective objective,
                    const Rat& time_quantum, long budget = 2000000);

struct EnumeratedExpectation {
  double wct = 0.0;
  double makespan = 0.0;
  long outcomes = 0;       // (core, interval) outcome combinations
  long simulations = 0;    // outcomes x tie orderings
};

// Exact expectation of the randomized rounding followed by list
// scheduling: every support combination and every ordering of equal-stamp
// flows, weighted by its probability.
EnumeratedExpectation enumerate_randomized(const LpModel& model,
                                           const LpSolution& sol,
                                           long outcome_budget = 10000,
                                           long tie_order_cap = 720);

struct PipelineResult {
  double lp_objective = 0.0;
  double alg_objective = 0.0;
  double final_estimate = 0.0;  // derandomization estimator (det mode)
  Assignment assignment;
  EstimatorReport report;  // empty in randomized mode
  LpSolution solution;
  IntervalGrid grid;
};

// LP -> rounding -> exact simulation for one instance.
PipelineResult run_pipeline(const CoflowInstance& inst, Objective objective,
                            RoundingMode mode, const Rat& epsilon,
                            std::uint64_t seed = 0);

struct RatioReport {
  std::string instance_id;
  std::uint64_t seed = 0;
  Objective objective = Objective::Wct;
  double lp_objective = 0.0;
  double alg_objective = 0.0;
  std::optional<double> opt_objective;
  double ratio = 0.0;
  double bound = 0.0;
  bool pass = false;
  double ms = 0.0;
  std::string error;  // nonempty when the instance failed to run
};

struct RatioAggregate {
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  int failures = 0;
  int count = 0;
};

struct HarnessConfig {
  int n_instances = 100;
  std::uint64_t base_seed = 42;
  Objective objective = Objective::Wct;
  RoundingMode mode = RoundingMode::Deterministic;
  Rat epsilon = 1;
  bool zero_release = false;
  int jobs = 1;
};

// Seeded desk-scale random instance: N <= 4, m <= 3, speeds from {1,2,3},
// n <= 5, sizes in [s_max, 10 s_max], releases in [0,5] unless zeroed.
CoflowInstance make_harness_instance(std::uint64_t seed, bool zero_release);

double ratio_bound(Objective objective, RoundingMode mode, const Rat& epsilon,
                   bool released);

std::vector<RatioReport> ratio_report(const HarnessConfig& config);
RatioAggregate aggregate_reports(const std::vector<RatioReport>& reports);
std::string reports_to_csv(const std::vector<RatioReport>& reports);
std::string reports_to_json(const std::vector<RatioReport>& reports);

}  // namespace coflow
