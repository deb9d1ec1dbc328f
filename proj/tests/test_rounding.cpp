#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "coflow/rounding.hpp"

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

struct Solved {
  LpModel model;
  LpSolution sol;
};

Solved solve_single() {
  CoflowInstance inst = single_flow();
  IntervalGrid grid = IntervalGrid::build(time_horizon(inst), Rat(1));
  LpModel model = build_wct_lp(inst, grid);
  LpSolution sol = solve(model);
  return {std::move(model), std::move(sol)};
}

Solved solve_random(std::uint64_t seed, Objective kind) {
  GenParams gp;
  gp.N = 2;
  gp.m = 2;
  gp.n = 3;
  gp.release_max = 4;
  gp.seed = seed;
  CoflowInstance inst = generate_random(gp);
  IntervalGrid grid = IntervalGrid::build(time_horizon(inst), Rat(1));
  LpModel model = kind == Objective::Wct ? build_wct_lp(inst, grid)
                                         : build_makespan_lp(inst, grid);
  LpSolution sol = solve(model);
  return {std::move(model), std::move(sol)};
}

}  // namespace

TEST_CASE("eta from epsilon") {
  CHECK(eta_from_epsilon(Rat(1), RoundingMode::Randomized) == Rat(1));
  CHECK(eta_from_epsilon(Rat(1), RoundingMode::Deterministic) == Rat(1, 2));
  CHECK(eta_from_epsilon(Rat(3, 2), RoundingMode::Deterministic) ==
        Rat(3, 4));
  CHECK_THROWS(eta_from_epsilon(Rat(0), RoundingMode::Deterministic));
  CHECK_THROWS(eta_from_epsilon(Rat(-1), RoundingMode::Randomized));
}

TEST_CASE("conditional estimators on the worked single flow") {
  Solved s = solve_single();
  EstimatorContext ctx(s.model, s.sol);
  REQUIRE(ctx.num_flows() == 1);
  PartialState state(1);

  // Unassigned flow: placing it in I_0 finishes at 2, in I_1 at 3.
  CHECK(estimator_D(ctx, state, 0, 1, 0) == doctest::Approx(2.0));
  CHECK(estimator_D(ctx, state, 0, 1, 1) == doctest::Approx(3.0));

  // Expected completion before conditioning: 1/2 * 2 + 1/2 * 3.
  CHECK(cond_exp_total_wct(ctx, state) == doctest::Approx(2.5));
  CHECK(cond_exp_makespan(ctx, state) == doctest::Approx(2.5));

  // After fixing the flow to I_0, E agrees with the D used to pick it.
  state[0] = std::make_pair(1, 0);
  CHECK(estimator_E(ctx, state, 0) == doctest::Approx(2.0));
  CHECK(cond_exp_total_wct(ctx, state) == doctest::Approx(2.0));
}

TEST_CASE("derandomization is optimal on the single flow") {
  Solved s = solve_single();
  for (auto kind : {Objective::Wct, Objective::Makespan}) {
    auto [a, report] = kind == Objective::Wct
                           ? derandomize_wct(s.model, s.sol)
                           : derandomize_makespan(s.model, s.sol);
    REQUIRE(a.flows.size() == 1);
    CHECK(a.mode == RoundingMode::Deterministic);
    CHECK(a.flows[0].core == 1);
    CHECK(a.flows[0].interval == 0);
    CHECK(a.flows[0].priority == Rat(0));
    CHECK(a.flows[0].tie_rank == 0);
    CHECK(report.final_value == doctest::Approx(2.0));
    REQUIRE(report.steps.size() == 1);
    CHECK(report.steps[0].parent_value == doctest::Approx(2.5));
    CHECK(report.steps[0].weighted_average == doctest::Approx(2.5));
    CHECK(report.steps[0].chosen_value == doctest::Approx(2.0));
  }
}

TEST_CASE("each greedy step picks at most the weighted average") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    for (auto kind : {Objective::Wct, Objective::Makespan}) {
      Solved s = solve_random(seed, kind);
      auto [a, report] = kind == Objective::Wct
                             ? derandomize_wct(s.model, s.sol)
                             : derandomize_makespan(s.model, s.sol);
      CHECK(a.flows.size() == s.model.flows.all.size());
      double prev = report.steps.front().parent_value;
      for (const EstimatorStep& step : report.steps) {
        // The step's children average back to the parent estimate...
        double avg = 0.0, psum = 0.0;
        double best = step.children.front().value;
        for (const auto& ch : step.children) {
          avg += ch.probability * ch.value;
          psum += ch.probability;
          best = std::min(best, ch.value);
        }
        CHECK(psum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(avg == doctest::Approx(step.weighted_average).epsilon(1e-9));
        // ...and the greedy choice is the minimum, so it never regresses.
        CHECK(step.chosen_value == doctest::Approx(best));
        CHECK(step.chosen_value <= step.weighted_average + 1e-9);
        CHECK(step.parent_value == doctest::Approx(prev).epsilon(1e-9));
        prev = step.chosen_value;
      }
      CHECK(report.final_value == doctest::Approx(prev).epsilon(1e-9));
    }
  }
}

TEST_CASE("sampling follows the LP marginals") {
  Solved s = solve_single();
  std::map<int, int> interval_count;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    Assignment a = sample_assignment(s.model, s.sol, 1000 + t);
    REQUIRE(a.flows.size() == 1);
    interval_count[a.flows[0].interval]++;
  }
  // y puts probability 1/2 on I_0 and 1/2 on I_1.
  double f0 = interval_count[0] / double(trials);
  CHECK(f0 > 0.48);
  CHECK(f0 < 0.52);
  CHECK(interval_count[0] + interval_count[1] == trials);
}

TEST_CASE("sampling is deterministic in the seed") {
  Solved s = solve_random(7, Objective::Wct);
  Assignment a = sample_assignment(s.model, s.sol, 99);
  Assignment b = sample_assignment(s.model, s.sol, 99);
  REQUIRE(a.flows.size() == b.flows.size());
  for (std::size_t f = 0; f < a.flows.size(); ++f) {
    CHECK(a.flows[f].core == b.flows[f].core);
    CHECK(a.flows[f].interval == b.flows[f].interval);
    CHECK(a.flows[f].tie_rank == b.flows[f].tie_rank);
  }
}

TEST_CASE("assignment JSON round trip") {
  Solved s = solve_random(11, Objective::Wct);
  auto [a, report] = derandomize_wct(s.model, s.sol);
  std::string text = assignment_to_json_text(a, s.model.instance.N);
  Assignment back = assignment_from_json_text(text, s.model.instance);
  REQUIRE(back.flows.size() == a.flows.size());
  for (std::size_t f = 0; f < a.flows.size(); ++f) {
    CHECK(back.flows[f].key == a.flows[f].key);
    CHECK(back.flows[f].core == a.flows[f].core);
    CHECK(back.flows[f].interval == a.flows[f].interval);
    CHECK(back.flows[f].priority == a.flows[f].priority);
  }
}
