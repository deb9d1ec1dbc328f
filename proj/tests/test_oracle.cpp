#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "coflow/oracle.hpp"

using namespace coflow;

namespace {

CoflowInstance single_flow() {
  CoflowInstance inst;
  inst.N = 1;
  inst.speeds = {Rat(1)};
  Coflow c;
  c.weight = 1;
  c.release = 0;
  c.flows.push_back({{1, 2, 1}, 2});
  inst.coflows.push_back(c);
  return validate(inst);
}

CoflowInstance shared_port_pair() {
  CoflowInstance inst;
  inst.N = 1;
  inst.speeds = {Rat(1)};
  Coflow c1, c2;
  c1.weight = 1;
  c1.flows.push_back({{1, 2, 1}, 2});
  c2.weight = 1;
  c2.flows.push_back({{1, 2, 2}, 3});
  inst.coflows = {c1, c2};
  return validate(inst);
}

}  // namespace

TEST_CASE("brute force on the worked single flow") {
  CoflowInstance inst = single_flow();
  CHECK(brute_force_opt(inst, Objective::Wct, Rat(1)) == Rat(2));
  CHECK(brute_force_opt(inst, Objective::Makespan, Rat(1)) == Rat(2));
}

TEST_CASE("brute force respects port contention and weights") {
  CoflowInstance inst = shared_port_pair();
  // One shared port, unit speed: 5 units of serialized work.
  CHECK(brute_force_opt(inst, Objective::Makespan, Rat(1)) == Rat(5));
  // SPT order: 2 + 5.
  CHECK(brute_force_opt(inst, Objective::Wct, Rat(1)) == Rat(7));

  // Weighting the long coflow flips the optimal order: 3 * 3 + 5.
  inst.coflows[1].weight = 3;
  CHECK(brute_force_opt(inst, Objective::Wct, Rat(1)) == Rat(14));
}

TEST_CASE("brute force uses faster cores and releases") {
  CoflowInstance inst = single_flow();
  inst.speeds = {Rat(1), Rat(2)};
  inst = validate(inst);
  CHECK(brute_force_opt(inst, Objective::Wct, Rat(1, 2)) == Rat(1));

  inst.coflows[0].release = 3;
  inst = validate(inst);
  CHECK(brute_force_opt(inst, Objective::Wct, Rat(1, 2)) == Rat(4));
}

TEST_CASE("a tiny budget is reported, not silently truncated") {
  GenParams gp;
  gp.N = 2;
  gp.m = 2;
  gp.n = 3;
  gp.seed = 9;
  CoflowInstance inst = generate_random(gp);
  CHECK_THROWS_AS(brute_force_opt(inst, Objective::Wct, Rat(1), 10),
                  OracleBudgetExceeded);
}

TEST_CASE("LP lower-bounds the brute-force optimum") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    GenParams gp;
    gp.N = 2;
    gp.m = 1;
    gp.n = 2;
    gp.size_min = 1;
    gp.size_max = 4;
    gp.speed_set = {1};
    gp.seed = 300 + seed;
    CoflowInstance inst = generate_random(gp);
    for (auto kind : {Objective::Wct, Objective::Makespan}) {
      IntervalGrid grid = IntervalGrid::build(time_horizon(inst), Rat(1, 2));
      LpModel model = kind == Objective::Wct ? build_wct_lp(inst, grid)
                                             : build_makespan_lp(inst, grid);
      LpSolution sol = solve(model);
      Rat opt = brute_force_opt(inst, kind, Rat(1));
      CHECK(sol.objective <= opt.convert_to<double>() + 1e-6);
    }
  }
}

TEST_CASE("enumerated expectation of the worked single flow") {
  CoflowInstance inst = single_flow();
  IntervalGrid grid = IntervalGrid::build(time_horizon(inst), Rat(1));
  LpModel model = build_wct_lp(inst, grid);
  LpSolution sol = solve(model);
  EnumeratedExpectation e = enumerate_randomized(model, sol);
  // Placement in I_0 finishes at 2, in I_1 at 3, each with probability 1/2.
  CHECK(e.wct == doctest::Approx(2.5));
  CHECK(e.makespan == doctest::Approx(2.5));
  CHECK(e.outcomes == 2);
  CHECK(e.simulations == 2);
}

TEST_CASE("pipeline reproduces the worked end-to-end run") {
  CoflowInstance inst = single_flow();
  PipelineResult r = run_pipeline(inst, Objective::Wct,
                                  RoundingMode::Deterministic, Rat(2));
  CHECK(r.lp_objective == doctest::Approx(1.75));
  CHECK(r.alg_objective == doctest::Approx(2.0));
  CHECK(r.final_estimate == doctest::Approx(2.0));
  REQUIRE(r.assignment.flows.size() == 1);
  CHECK(r.assignment.flows[0].core == 1);
  CHECK(r.assignment.flows[0].interval == 0);
  CHECK(r.alg_objective / r.lp_objective == doctest::Approx(8.0 / 7.0));
}

TEST_CASE("pipeline randomized mode is seed-deterministic") {
  CoflowInstance inst = make_harness_instance(4, false);
  PipelineResult a = run_pipeline(inst, Objective::Wct,
                                  RoundingMode::Randomized, Rat(1), 17);
  PipelineResult b = run_pipeline(inst, Objective::Wct,
                                  RoundingMode::Randomized, Rat(1), 17);
  CHECK(a.alg_objective == b.alg_objective);
  CHECK(a.lp_objective == b.lp_objective);
}

TEST_CASE("harness instances are deterministic and in range") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CoflowInstance x = make_harness_instance(seed, false);
    CoflowInstance y = make_harness_instance(seed, false);
    CHECK(instance_to_json_text(x) == instance_to_json_text(y));
    CHECK(x.N <= 4);
    CHECK(x.num_cores() <= 3);
    CHECK(x.num_coflows() <= 5);
    CoflowInstance z = make_harness_instance(seed, true);
    CHECK(z.max_release() == Rat(0));
  }
}

TEST_CASE("ratio harness output and aggregation") {
  HarnessConfig config;
  config.n_instances = 6;
  config.jobs = 2;
  std::vector<RatioReport> reports = ratio_report(config);
  REQUIRE(reports.size() == 6);
  for (const RatioReport& r : reports) {
    CHECK(r.error.empty());
    CHECK(r.bound == doctest::Approx(4.0));  // 3 + epsilon, epsilon = 1
    CHECK(r.ratio == doctest::Approx(r.alg_objective / r.lp_objective));
    CHECK(r.pass);
  }
  RatioAggregate agg = aggregate_reports(reports);
  CHECK(agg.count == 6);
  CHECK(agg.failures == 0);
  CHECK(agg.max_ratio >= agg.mean_ratio);
  CHECK(agg.mean_ratio > 1.0 - 1e-9);

  std::string csv = reports_to_csv(reports);
  int lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 7);  // header + one row per instance
  CHECK(reports_to_json(reports).find("\"ratio\"") != std::string::npos);
}

TEST_CASE("ratio bounds by mode and objective") {
  CHECK(ratio_bound(Objective::Wct, RoundingMode::Deterministic, Rat(1),
                    true) == doctest::Approx(4.0));
  CHECK(ratio_bound(Objective::Wct, RoundingMode::Deterministic, Rat(1),
                    false) == doctest::Approx(3.0));
  CHECK(ratio_bound(Objective::Makespan, RoundingMode::Deterministic, Rat(1),
                    false) == doctest::Approx(3.0));
  // Randomized: eta = epsilon, 3(1 + eta/3) and 2(1 + eta/2).
  CHECK(ratio_bound(Objective::Wct, RoundingMode::Randomized, Rat(1),
                    true) == doctest::Approx(4.0));
  CHECK(ratio_bound(Objective::Wct, RoundingMode::Randomized, Rat(1),
                    false) == doctest::Approx(3.0));
}
