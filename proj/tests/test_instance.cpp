#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "coflow/instance.hpp"

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
  return inst;
}

}  // namespace

TEST_CASE("validation accepts the one-flow instance") {
  CoflowInstance inst = validate(single_flow());
  CHECK(inst.num_flows() == 1);
  CHECK(inst.s_min() == 1);
  CHECK(inst.s_max() == 1);
}

TEST_CASE("validation rejects demand below the fastest speed") {
  CoflowInstance inst = single_flow();
  inst.speeds = {Rat(2)};
  inst.coflows[0].flows[0].size = 1;
  CHECK_THROWS_AS(validate(inst), ValidationError);
  try {
    validate(inst);
  } catch (const ValidationError& e) {
    bool found = false;
    for (const auto& msg : e.issues())
      if (msg.find("d/s_max") != std::string::npos) found = true;
    CHECK(found);
  }
}

TEST_CASE("validation rejects nonpositive weight") {
  CoflowInstance inst = single_flow();
  inst.coflows[0].weight = 0;
  CHECK_THROWS_AS(validate(inst), ValidationError);
}

TEST_CASE("validation rejects out-of-range ports and negative release") {
  CoflowInstance inst = single_flow();
  inst.coflows[0].flows[0].key.dst = 0;
  CHECK_THROWS_AS(validate(inst), ValidationError);

  inst = single_flow();
  inst.coflows[0].release = -1;
  CHECK_THROWS_AS(validate(inst), ValidationError);
}

TEST_CASE("time horizon matches the direct formula") {
  // N=2, m=2, s=[1,2], one coflow r=0, d(1,3)=2, d(2,4)=4:
  // T = 0 + (1/1)(4 + 4) - 1 = 7.
  CoflowInstance inst;
  inst.N = 2;
  inst.speeds = {Rat(1), Rat(2)};
  Coflow c;
  c.weight = 1;
  c.release = 0;
  c.flows.push_back({{1, 3, 1}, 2});
  c.flows.push_back({{2, 4, 1}, 4});
  inst.coflows.push_back(c);
  inst = validate(inst);
  CHECK(time_horizon(inst) == Rat(7));

  CHECK(time_horizon(validate(single_flow())) == Rat(3));
}

TEST_CASE("time horizon scales affinely with the loads") {
  CoflowInstance inst = validate(single_flow());
  Rat t1 = time_horizon(inst);
  for (int c : {2, 3, 5}) {
    CoflowInstance scaled = inst;
    for (auto& k : scaled.coflows)
      for (auto& f : k.flows) f.size *= c;
    Rat t2 = time_horizon(validate(scaled));
    Rat r = inst.max_release();
    CHECK(t2 == Rat(c) * (t1 + 1 - r) + r - 1);
  }
}

TEST_CASE("time horizon exceeds the largest release") {
  GenParams gp;
  gp.N = 3;
  gp.n = 3;
  gp.release_max = 9;
  for (std::uint64_t s = 0; s < 20; ++s) {
    gp.seed = s;
    CoflowInstance inst = generate_random(gp);
    CHECK(time_horizon(inst) >= inst.max_release() + 1);
  }
}

TEST_CASE("generator is deterministic and respects its ranges") {
  GenParams gp;
  gp.N = 3;
  gp.m = 2;
  gp.n = 3;
  gp.speed_set = {1, 2};
  gp.size_min = 2;
  gp.size_max = 10;
  gp.release_max = 0;
  gp.seed = 7;
  CoflowInstance a = generate_random(gp);
  CoflowInstance b = generate_random(gp);
  CHECK(instance_to_json_text(a) == instance_to_json_text(b));
  for (const Coflow& c : a.coflows) {
    CHECK(c.release == 0);
    CHECK(!c.flows.empty());
    for (const Flow& f : c.flows) {
      CHECK(f.size >= 2);
      CHECK(f.size <= 10);
    }
  }
}

TEST_CASE("generator rejects sizes below the fastest speed") {
  GenParams gp;
  gp.speed_set = {1, 2};
  gp.size_min = 1;
  CHECK_THROWS_AS(generate_random(gp), ValidationError);
}

TEST_CASE("json round trip is the identity") {
  GenParams gp;
  gp.N = 3;
  gp.n = 2;
  gp.release_max = 4;
  gp.seed = 11;
  CoflowInstance inst = generate_random(gp);
  std::string text = instance_to_json_text(inst);
  CoflowInstance back = instance_from_json_text(text);
  CHECK(instance_to_json_text(back) == text);
}

TEST_CASE("parser rejects bad files") {
  CHECK_THROWS(instance_from_json_text("{"));
  // dst out of range
  CHECK_THROWS(instance_from_json_text(R"({"N":1,"cores":[{"speed":1}],
    "coflows":[{"weight":1,"release":0,
      "flows":[{"src":1,"dst":0,"size":2}]}]})"));
  // fractional demand
  CHECK_THROWS_WITH_AS(
      instance_from_json_text(R"({"N":1,"cores":[{"speed":1}],
    "coflows":[{"weight":1,"release":0,
      "flows":[{"src":1,"dst":1,"size":2.5}]}]})"),
      doctest::Contains("integer"), ParseError);
  // unknown field
  CHECK_THROWS(instance_from_json_text(R"({"N":1,"cores":[{"speed":1}],"x":1,
    "coflows":[{"weight":1,"release":0,
      "flows":[{"src":1,"dst":1,"size":2}]}]})"));
}

TEST_CASE("flow-set view partitions the flows") {
  GenParams gp;
  gp.N = 4;
  gp.m = 2;
  gp.n = 4;
  gp.seed = 3;
  CoflowInstance inst = generate_random(gp);
  FlowSetView view = FlowSetView::build(inst);
  std::set<int> from_src, from_dst, from_coflow;
  for (const auto& [i, idxs] : view.by_src)
    for (int f : idxs) CHECK(from_src.insert(f).second);
  for (const auto& [j, idxs] : view.by_dst)
    for (int f : idxs) CHECK(from_dst.insert(f).second);
  for (const auto& [k, idxs] : view.by_coflow)
    for (int f : idxs) CHECK(from_coflow.insert(f).second);
  CHECK(from_src.size() == view.all.size());
  CHECK(from_dst.size() == view.all.size());
  CHECK(from_coflow.size() == view.all.size());
  for (std::size_t f = 1; f < view.all.size(); ++f)
    CHECK(view.all[f - 1].key < view.all[f].key);
}
