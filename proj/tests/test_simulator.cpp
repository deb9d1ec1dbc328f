#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coflow/simulator.hpp"

using namespace coflow;

namespace {

Assignment manual(std::vector<AssignedFlow> flows) {
  Assignment a;
  a.mode = RoundingMode::Deterministic;
  a.epsilon = Rat(1);
  a.eta = Rat(1, 2);
  a.flows = std::move(flows);
  return a;
}

CoflowInstance lone_flow(std::int64_t d, Rat speed) {
  CoflowInstance inst;
  inst.N = 1;
  inst.speeds = {speed};
  Coflow c;
  c.weight = 1;
  c.release = 0;
  c.flows.push_back({{1, 2, 1}, d});
  inst.coflows.push_back(c);
  return validate(inst);
}

}  // namespace

TEST_CASE("lone flow runs start to finish") {
  CoflowInstance inst = lone_flow(3, Rat(1));
  Assignment a = manual({{{1, 2, 1}, 1, 0, Rat(0), 0}});
  Schedule s = list_schedule(inst, a);
  CHECK(s.flow_completion[0] == Rat(3));
  CHECK(s.makespan == Rat(3));
  CHECK(s.wct == Rat(3));
  REQUIRE(s.segments.size() == 1);
  CHECK(s.segments[0].start == Rat(0));
  CHECK(s.segments[0].end == Rat(3));
  CHECK(validate_schedule(s, inst, a).ok());

  // On a core of speed 2 the same flow takes 3/2.
  CoflowInstance fast = lone_flow(3, Rat(2));
  Schedule sf = list_schedule(fast, a);
  CHECK(sf.makespan == Rat(3, 2));
}

TEST_CASE("shared input port serializes; flow order breaks ties") {
  CoflowInstance inst;
  inst.N = 1;
  inst.speeds = {Rat(1)};
  Coflow c1, c2;
  c1.weight = 1;
  c1.flows.push_back({{1, 2, 1}, 2});
  c2.weight = 1;
  c2.flows.push_back({{1, 2, 2}, 3});
  inst.coflows = {c1, c2};
  inst = validate(inst);

  Assignment a = manual({{{1, 2, 1}, 1, 0, Rat(0), 0},
                         {{1, 2, 2}, 1, 0, Rat(0), 0}});
  Schedule s = list_schedule(inst, a);
  CHECK(s.flow_completion[0] == Rat(2));
  CHECK(s.flow_completion[1] == Rat(5));
  CHECK(s.coflow_completion.at(1) == Rat(2));
  CHECK(s.coflow_completion.at(2) == Rat(5));
  CHECK(s.wct == Rat(7));
  CHECK(s.makespan == Rat(5));
  CHECK(validate_schedule(s, inst, a).ok());

  // A lower priority stamp preempts the tie-break order.
  Assignment b = manual({{{1, 2, 1}, 1, 0, Rat(1), 0},
                         {{1, 2, 2}, 1, 0, Rat(0), 0}});
  Schedule sb = list_schedule(inst, b);
  CHECK(sb.flow_completion[1] == Rat(3));
  CHECK(sb.flow_completion[0] == Rat(5));
  CHECK(validate_schedule(sb, inst, b).ok());
}

TEST_CASE("port-disjoint flows share a core in parallel") {
  CoflowInstance inst;
  inst.N = 2;
  inst.speeds = {Rat(1)};
  Coflow c;
  c.weight = 1;
  c.flows.push_back({{1, 3, 1}, 2});
  c.flows.push_back({{2, 4, 1}, 2});
  inst.coflows = {c};
  inst = validate(inst);

  Assignment a = manual({{{1, 3, 1}, 1, 0, Rat(0), 0},
                         {{2, 4, 1}, 1, 0, Rat(0), 0}});
  Schedule s = list_schedule(inst, a);
  CHECK(s.flow_completion[0] == Rat(2));
  CHECK(s.flow_completion[1] == Rat(2));
  CHECK(s.makespan == Rat(2));
  CHECK(validate_schedule(s, inst, a).ok());
}

TEST_CASE("release times gate admission") {
  CoflowInstance inst = lone_flow(2, Rat(1));
  inst.coflows[0].release = 3;
  inst = validate(inst);
  Assignment a = manual({{{1, 2, 1}, 1, 0, Rat(0), 0}});
  Schedule s = list_schedule(inst, a);
  CHECK(s.flow_completion[0] == Rat(5));
  CHECK(validate_schedule(s, inst, a).ok());

  // A priority stamp later than the release delays the start further.
  Assignment b = manual({{{1, 2, 1}, 1, 2, Rat(4), 0}});
  Schedule sb = list_schedule(inst, b);
  CHECK(sb.flow_completion[0] == Rat(6));
  CHECK(validate_schedule(sb, inst, b).ok());
}

TEST_CASE("event engine matches the fixed-step reference") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    GenParams gp;
    gp.N = 2;
    gp.m = 2;
    gp.n = 3;
    gp.release_max = 4;
    gp.seed = 100 + seed;
    CoflowInstance inst = generate_random(gp);
    IntervalGrid grid = IntervalGrid::build(time_horizon(inst), Rat(1));
    LpModel model = build_wct_lp(inst, grid);
    LpSolution sol = solve(model);
    Assignment a = sample_assignment(model, sol, seed);

    Schedule ev = list_schedule(inst, a);
    Schedule ref = reference_unit_step(inst, a, reference_step_for(inst, a));
    REQUIRE(ev.flow_completion.size() == ref.flow_completion.size());
    for (std::size_t f = 0; f < ev.flow_completion.size(); ++f)
      CHECK(ev.flow_completion[f] == ref.flow_completion[f]);
    CHECK(ev.wct == ref.wct);
    CHECK(ev.makespan == ref.makespan);
    CHECK(validate_schedule(ev, inst, a).ok());

    // The float engine agrees with the exact one to rounding error.
    ScheduleD fd = list_schedule_float(inst, a);
    for (std::size_t f = 0; f < ev.flow_completion.size(); ++f)
      CHECK(fd.flow_completion[f] ==
            doctest::Approx(ev.flow_completion[f].convert_to<double>())
                .epsilon(1e-9));
  }
}

TEST_CASE("speeding every core by c divides all times by c") {
  GenParams gp;
  gp.N = 2;
  gp.m = 2;
  gp.n = 2;
  gp.release_max = 4;
  gp.seed = 21;
  CoflowInstance inst = generate_random(gp);
  IntervalGrid grid = IntervalGrid::build(time_horizon(inst), Rat(1));
  LpModel model = build_wct_lp(inst, grid);
  LpSolution sol = solve(model);
  Assignment a = sample_assignment(model, sol, 3);
  Schedule base = list_schedule(inst, a);

  const Rat c(3);
  CoflowInstance fast = inst;
  for (Rat& sp : fast.speeds) sp = Rat(sp * c);
  for (Coflow& k : fast.coflows) k.release = Rat(k.release / c);
  Assignment af = a;
  for (AssignedFlow& fl : af.flows) fl.priority = Rat(fl.priority / c);
  Schedule scaled = list_schedule(fast, af);

  for (std::size_t f = 0; f < base.flow_completion.size(); ++f)
    CHECK(scaled.flow_completion[f] == Rat(base.flow_completion[f] / c));
  CHECK(scaled.makespan == Rat(base.makespan / c));
}

TEST_CASE("the auditor flags corrupted schedules") {
  CoflowInstance inst;
  inst.N = 1;
  inst.speeds = {Rat(1)};
  Coflow c1, c2;
  c1.weight = 1;
  c1.flows.push_back({{1, 2, 1}, 2});
  c2.weight = 1;
  c2.flows.push_back({{1, 2, 2}, 3});
  inst.coflows = {c1, c2};
  inst = validate(inst);
  Assignment a = manual({{{1, 2, 1}, 1, 0, Rat(0), 0},
                         {{1, 2, 2}, 1, 0, Rat(0), 0}});
  Schedule good = list_schedule(inst, a);
  REQUIRE(validate_schedule(good, inst, a).ok());

  // Overlapping segments on a shared port.
  Schedule overlap = good;
  overlap.segments[1].start = Rat(1);
  CHECK_FALSE(validate_schedule(overlap, inst, a).ok());

  // An idle gap while a ready flow waits.
  Schedule idle = good;
  for (auto& seg : idle.segments)
    if (seg.flow == 1) {
      seg.start = Rat(seg.start + 1);
      seg.end = Rat(seg.end + 1);
    }
  CHECK_FALSE(validate_schedule(idle, inst, a).ok());

  // Completion bookkeeping that disagrees with the trace.
  Schedule lied = good;
  lied.flow_completion[0] = Rat(1);
  CHECK_FALSE(validate_schedule(lied, inst, a).ok());
}

TEST_CASE("objective values track the weights") {
  CoflowInstance inst;
  inst.N = 1;
  inst.speeds = {Rat(1)};
  Coflow c1, c2;
  c1.weight = 2;
  c1.flows.push_back({{1, 2, 1}, 2});
  c2.weight = 3;
  c2.flows.push_back({{1, 2, 2}, 3});
  inst.coflows = {c1, c2};
  inst = validate(inst);
  Assignment a = manual({{{1, 2, 1}, 1, 0, Rat(0), 0},
                         {{1, 2, 2}, 1, 0, Rat(0), 0}});
  Schedule s = list_schedule(inst, a);
  ObjectiveValues v = objective_values(s, inst);
  CHECK(v.wct == Rat(2 * 2 + 3 * 5));
  CHECK(v.makespan == Rat(5));

  CoflowInstance doubled = inst;
  for (Coflow& k : doubled.coflows) k.weight = Rat(k.weight * 2);
  ObjectiveValues v2 = objective_values(s, doubled);
  CHECK(v2.wct == Rat(2 * v.wct));
  CHECK(v2.makespan == v.makespan);
}
