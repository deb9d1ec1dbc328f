#include "coflow/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

namespace coflow {

namespace {

using json = nlohmann::ordered_json;

std::int64_t to_int64(const Rat& r) {
  return boost::multiprecision::numerator(r).convert_to<std::int64_t>();
}

bool is_integer(const Rat& r) {
  return boost::multiprecision::denominator(r) == 1;
}

// Smallest integer g with g * q >= bound.
long ceil_div(const Rat& bound, const Rat& q) {
  Rat ratio = bound / q;
  BigInt num(boost::multiprecision::numerator(ratio));
  BigInt den(boost::multiprecision::denominator(ratio));
  BigInt g = num / den;
  if (g * den < num) ++g;
  return g.convert_to<long>();
}

struct BruteProblem {
  const CoflowInstance* inst;
  Objective objective;
  Rat quantum;
  long budget;

  FlowSetView view;
  int F = 0, m = 0, n = 0;
  std::vector<std::int64_t> decrement;  // work units per quantum per core
  std::vector<std::int64_t> initial;    // remaining work units per flow
  std::int64_t scale = 1;
  long guard_steps = 0;

  long expansions = 0;
  std::unordered_map<std::string, std::optional<Rat>> memo;

  std::string state_key(long t, const std::vector<std::int64_t>& rem) const {
    std::string key(sizeof(long) + rem.size() * sizeof(std::int64_t), '\0');
    std::memcpy(key.data(), &t, sizeof(long));
    std::memcpy(key.data() + sizeof(long), rem.data(),
                rem.size() * sizeof(std::int64_t));
    return key;
  }

  std::optional<Rat> solve(long t, std::vector<std::int64_t>& rem);
};

std::optional<Rat> BruteProblem::solve(long t, std::vector<std::int64_t>& rem) {
  if (std::all_of(rem.begin(), rem.end(),
                  [](std::int64_t r) { return r == 0; })) {
    return Rat(0);
  }
  if (t > guard_steps) return std::nullopt;
  if (++expansions > budget) {
    throw OracleBudgetExceeded(
        "brute-force search exceeded its expansion budget (" +
        std::to_string(budget) + ")");
  }

  const Rat now = Rat(t) * quantum;

  // Flows that may transmit during [t*q, (t+1)*q).
  std::vector<int> active;
  Rat next_release;  // earliest release strictly after `now`, if any
  bool has_next_release = false;
  for (int f = 0; f < F; ++f) {
    if (rem[f] == 0) continue;
    const Rat& r = inst->coflows[view.all[f].key.coflow - 1].release;
    if (r <= now) {
      active.push_back(f);
    } else if (!has_next_release || r < next_release) {
      next_release = r;
      has_next_release = true;
    }
  }
  if (active.empty()) {
    if (!has_next_release) return std::nullopt;  // unreachable for valid data
    long skip = ceil_div(next_release, quantum);
    return solve(std::max(skip, t + 1), rem);
  }

  std::string key = state_key(t, rem);
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  std::optional<Rat> best;
  std::vector<int> choice(active.size(), 0);  // 0 = idle, else core p
  const int ports = 2 * inst->N + 1;
  std::vector<std::vector<char>> in_busy(m + 1, std::vector<char>(ports));
  std::vector<std::vector<char>> out_busy(m + 1, std::vector<char>(ports));

  // Depth-first enumeration over per-flow core choices.
  auto consider = [&]() {
    std::vector<std::int64_t> next = rem;
    // Per-coflow max completion offset among flows finishing this quantum.
    std::map<int, Rat> finished;
    for (std::size_t a = 0; a < active.size(); ++a) {
      if (choice[a] == 0) continue;
      int f = active[a];
      int p = choice[a];
      if (next[f] <= decrement[p - 1]) {
        Rat finish = now + Rat(next[f]) / (inst->speed(p) * Rat(scale));
        int k = view.all[f].key.coflow;
        auto it = finished.find(k);
        if (it == finished.end() || it->second < finish) finished[k] = finish;
        next[f] = 0;
      } else {
        next[f] -= decrement[p - 1];
      }
    }

    Rat local(0);
    bool any_completion = false;
    for (const auto& [k, finish] : finished) {
      bool complete = true;
      for (int g : view.by_coflow.at(k)) {
        if (next[g] != 0) {
          complete = false;
          break;
        }
      }
      if (!complete) continue;
      any_completion = true;
      if (objective == Objective::Wct) {
        local += inst->coflows[k - 1].weight * finish;
      } else if (local < finish) {
        local = finish;
      }
    }

    std::optional<Rat> child = solve(t + 1, next);
    if (!child) return;
    Rat value = objective == Objective::Wct
                    ? local + *child
                    : (any_completion ? std::max(local, *child) : *child);
    if (!best || value < *best) best = value;
  };

  auto dfs = [&](auto&& self, std::size_t a) -> void {
    if (a == active.size()) {
      consider();
      return;
    }
    const FlowKey& fk = view.all[active[a]].key;
    choice[a] = 0;
    self(self, a + 1);  // idle
    for (int p = 1; p <= m; ++p) {
      if (in_busy[p][fk.src] || out_busy[p][fk.dst]) continue;
      in_busy[p][fk.src] = 1;
      out_busy[p][fk.dst] = 1;
      choice[a] = p;
      self(self, a + 1);
      in_busy[p][fk.src] = 0;
      out_busy[p][fk.dst] = 0;
    }
    choice[a] = 0;
  };
  dfs(dfs, 0);

  memo.emplace(std::move(key), best);
  return best;
}

}  // namespace

Rat brute_force_opt(const CoflowInstance& inst, Objective objective,
                    const Rat& time_quantum, long budget) {
  if (time_quantum <= 0) {
    throw std::invalid_argument("time quantum must be positive");
  }
  BruteProblem bp;
  bp.inst = &inst;
  bp.objective = objective;
  bp.quantum = time_quantum;
  bp.budget = budget;
  bp.view = FlowSetView::build(inst);
  bp.F = static_cast<int>(bp.view.all.size());
  bp.m = inst.num_cores();
  bp.n = inst.num_coflows();

  // Scale sizes so one quantum of work on any core is an integer.
  BigInt scale = 1;
  for (int p = 1; p <= bp.m; ++p) {
    Rat dec = inst.speed(p) * time_quantum;
    scale = int_lcm(scale, BigInt(boost::multiprecision::denominator(dec)));
  }
  bp.scale = scale.convert_to<std::int64_t>();
  scale = bp.scale;
  bp.decrement.resize(bp.m);
  for (int p = 1; p <= bp.m; ++p) {
    Rat dec = inst.speed(p) * time_quantum * Rat(scale);
    if (!is_integer(dec)) {
      throw std::invalid_argument("quantum does not quantize core speeds");
    }
    bp.decrement[p - 1] = to_int64(dec);
  }
  for (const Coflow& c : inst.coflows) {
    if (!is_integer(c.release / time_quantum)) {
      throw std::invalid_argument("quantum does not divide a release time");
    }
  }
  std::vector<std::int64_t> rem(bp.F);
  for (int f = 0; f < bp.F; ++f) rem[f] = bp.view.all[f].size * bp.scale;
  bp.initial = rem;
  bp.guard_steps = ceil_div(time_horizon(inst) + Rat(1), time_quantum);

  std::optional<Rat> value = bp.solve(0, rem);
  if (!value) {
    throw std::runtime_error("brute-force search found no schedule within the "
                             "time horizon");
  }
  return *value;
}

EnumeratedExpectation enumerate_randomized(const LpModel& model,
                                           const LpSolution& sol,
                                           long outcome_budget,
                                           long tie_order_cap) {
  EstimatorContext ctx(model, sol);
  const int F = ctx.num_flows();
  const IntervalGrid& grid = model.grid;

  long total = 1;
  for (int f = 0; f < F; ++f) {
    long sz = static_cast<long>(ctx.support(f).size());
    if (sz == 0) throw std::runtime_error("flow with empty rounding support");
    if (total > outcome_budget / sz + 1) total = outcome_budget + 1;
    else total *= sz;
    if (total > outcome_budget) {
      throw OracleBudgetExceeded("rounding support product exceeds " +
                                 std::to_string(outcome_budget) + " outcomes");
    }
  }

  Assignment a;
  a.mode = RoundingMode::Randomized;
  a.eta = grid.eta();
  a.flows.resize(F);
  for (int f = 0; f < F; ++f) a.flows[f].key = model.flows.all[f].key;

  EnumeratedExpectation out;
  std::vector<int> pick(F, 0);

  auto run_outcome = [&](double prob) {
    for (int f = 0; f < F; ++f) {
      const auto& c = ctx.support(f)[pick[f]];
      a.flows[f].core = c.core;
      a.flows[f].interval = c.interval;
      a.flows[f].priority = grid.priority_stamp(c.interval);
    }
    // Group flows with equal stamps; ordering within a group is uniform.
    std::vector<int> order(F);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
      return a.flows[x].priority < a.flows[y].priority;
    });
    std::vector<std::vector<int>> groups;
    for (int idx = 0; idx < F;) {
      int j = idx;
      while (j < F &&
             a.flows[order[j]].priority == a.flows[order[idx]].priority) {
        ++j;
      }
      groups.emplace_back(order.begin() + idx, order.begin() + j);
      idx = j;
    }
    long orderings = 1;
    for (const auto& g : groups) {
      for (std::size_t i = 2; i <= g.size(); ++i) {
        orderings *= static_cast<long>(i);
        if (orderings > tie_order_cap) {
          throw OracleBudgetExceeded(
              "tie-order enumeration exceeds " +
              std::to_string(tie_order_cap) + " orderings");
        }
      }
    }

    double w = prob / static_cast<double>(orderings);
    // Odometer over per-group permutations.
    std::vector<std::vector<int>> perm = groups;
    auto emit = [&]() {
      std::uint64_t rank = 1;
      for (const auto& g : perm) {
        for (int f : g) a.flows[f].tie_rank = rank++;
      }
      ScheduleD sched = list_schedule_float(model.instance, a);
      out.wct += w * sched.wct;
      out.makespan += w * sched.makespan;
      ++out.simulations;
    };
    auto rec = [&](auto&& self, std::size_t gi) -> void {
      if (gi == perm.size()) {
        emit();
        return;
      }
      std::sort(perm[gi].begin(), perm[gi].end());
      do {
        self(self, gi + 1);
      } while (std::next_permutation(perm[gi].begin(), perm[gi].end()));
    };
    rec(rec, 0);
    ++out.outcomes;
  };

  auto choose = [&](auto&& self, int f, double prob) -> void {
    if (f == F) {
      run_outcome(prob);
      return;
    }
    const auto& sup = ctx.support(f);
    for (std::size_t ci = 0; ci < sup.size(); ++ci) {
      pick[f] = static_cast<int>(ci);
      self(self, f + 1, prob * sup[ci].probability);
    }
  };
  choose(choose, 0, 1.0);
  return out;
}

PipelineResult run_pipeline(const CoflowInstance& inst, Objective objective,
                            RoundingMode mode, const Rat& epsilon,
                            std::uint64_t seed) {
  PipelineResult r;
  Rat eta = eta_from_epsilon(epsilon, mode);
  IntervalGrid grid = IntervalGrid::build(time_horizon(inst), eta);
  LpModel model = objective == Objective::Wct ? build_wct_lp(inst, grid)
                                              : build_makespan_lp(inst, grid);
  r.solution = solve(model);
  r.grid = grid;
  r.lp_objective = r.solution.objective;

  if (mode == RoundingMode::Deterministic) {
    auto [a, report] = objective == Objective::Wct
                           ? derandomize_wct(model, r.solution)
                           : derandomize_makespan(model, r.solution);
    r.assignment = std::move(a);
    r.report = std::move(report);
    r.final_estimate = r.report.final_value;
  } else {
    r.assignment = sample_assignment(model, r.solution, seed);
  }
  r.assignment.epsilon = epsilon;

  Schedule sched = list_schedule(inst, r.assignment);
  r.alg_objective = objective == Objective::Wct ? to_double(sched.wct)
                                                : to_double(sched.makespan);
  return r;
}

CoflowInstance make_harness_instance(std::uint64_t seed, bool zero_release) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  GenParams gp;
  gp.N = 2 + static_cast<int>(rng() % 3);  // 2..4
  gp.m = 1 + static_cast<int>(rng() % 3);  // 1..3
  gp.n = 1 + static_cast<int>(rng() % 5);  // 1..5
  gp.speed_set.clear();
  for (int p = 0; p < gp.m; ++p) {
    gp.speed_set.push_back(1 + static_cast<std::int64_t>(rng() % 3));
  }
  std::int64_t s_max =
      *std::max_element(gp.speed_set.begin(), gp.speed_set.end());
  gp.size_min = s_max;
  gp.size_max = 10 * s_max;
  gp.release_min = 0;
  gp.release_max = zero_release ? 0 : 5;
  gp.weight_min = 1;
  gp.weight_max = 5;
  gp.seed = rng();
  return generate_random(gp);
}

double ratio_bound(Objective objective, RoundingMode mode, const Rat& epsilon,
                   bool released) {
  double eps = to_double(epsilon);
  if (objective == Objective::Makespan) return 2.0 + eps;
  if (mode == RoundingMode::Deterministic) {
    return released ? 3.0 + eps : 2.0 + eps;
  }
  Rat eta = eta_from_epsilon(epsilon, mode);
  return released ? 3.0 * (1.0 + to_double(eta) / 3.0)
                  : 2.0 * (1.0 + to_double(eta) / 2.0);
}

std::vector<RatioReport> ratio_report(const HarnessConfig& config) {
  std::vector<RatioReport> reports(config.n_instances);

  auto run_one = [&](int i) {
    RatioReport& rep = reports[i];
    rep.seed = config.base_seed + static_cast<std::uint64_t>(i);
    rep.objective = config.objective;
    std::ostringstream id;
    id << "harness-" << rep.seed;
    rep.instance_id = id.str();
    auto t0 = std::chrono::steady_clock::now();
    try {
      CoflowInstance inst = make_harness_instance(rep.seed,
                                                  config.zero_release);
      bool released = inst.max_release() > 0;
      rep.bound = ratio_bound(config.objective, config.mode, config.epsilon,
                              released);
      PipelineResult pr = run_pipeline(inst, config.objective, config.mode,
                                       config.epsilon, rep.seed);
      rep.lp_objective = pr.lp_objective;
      rep.alg_objective = pr.alg_objective;
      rep.ratio = pr.lp_objective > 0 ? pr.alg_objective / pr.lp_objective
                                      : 1.0;
      rep.pass = rep.ratio <= rep.bound + 1e-9;
    } catch (const std::exception& e) {
      rep.error = e.what();
      rep.pass = false;
    }
    auto t1 = std::chrono::steady_clock::now();
    rep.ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  };

  int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    for (int i = 0; i < config.n_instances; ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < config.n_instances;
             i = next.fetch_add(1)) {
          run_one(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return reports;
}

RatioAggregate aggregate_reports(const std::vector<RatioReport>& reports) {
  RatioAggregate agg;
  agg.count = static_cast<int>(reports.size());
  double sum = 0.0;
  int ok = 0;
  for (const auto& r : reports) {
    if (!r.error.empty() || !r.pass) ++agg.failures;
    if (r.error.empty()) {
      agg.max_ratio = std::max(agg.max_ratio, r.ratio);
      sum += r.ratio;
      ++ok;
    }
  }
  agg.mean_ratio = ok > 0 ? sum / ok : 0.0;
  return agg;
}

std::string reports_to_csv(const std::vector<RatioReport>& reports) {
  std::ostringstream os;
  os << "instance,seed,objective,lp,alg,opt,ratio,bound,pass,ms\n";
  for (const auto& r : reports) {
    os << r.instance_id << ',' << r.seed << ','
       << (r.objective == Objective::Wct ? "wct" : "makespan") << ','
       << r.lp_objective << ',' << r.alg_objective << ',';
    if (r.opt_objective) os << *r.opt_objective;
    os << ',' << r.ratio << ',' << r.bound << ','
       << (r.pass ? "true" : "false") << ',' << r.ms << '\n';
  }
  return os.str();
}

std::string reports_to_json(const std::vector<RatioReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json row;
    row["instance"] = r.instance_id;
    row["seed"] = r.seed;
    row["objective"] = r.objective == Objective::Wct ? "wct" : "makespan";
    row["lp"] = r.lp_objective;
    row["alg"] = r.alg_objective;
    if (r.opt_objective) row["opt"] = *r.opt_objective;
    else row["opt"] = nullptr;
    row["ratio"] = r.ratio;
    row["bound"] = r.bound;
    row["pass"] = r.pass;
    row["ms"] = r.ms;
    if (!r.error.empty()) row["error"] = r.error;
    arr.push_back(std::move(row));
  }
  return arr.dump(2) + "\n";
}

}  // namespace coflow
