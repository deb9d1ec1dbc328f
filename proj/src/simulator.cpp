#include "coflow/simulator.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace coflow {
namespace {

using json = nlohmann::ordered_json;

template <class Real>
struct Arith {
  static Real from_rat(const Rat& r) { return r; }
  static bool done(const Real& remaining) { return remaining <= 0; }
};

template <>
struct Arith<double> {
  static double from_rat(const Rat& r) { return to_double(r); }
  static bool done(const double& remaining) { return remaining <= 1e-9; }
};

struct FlowRun {
  FlowKey key;
  int core = 0;
  Rat ready;  // max(release, priority stamp)
  Rat priority;
  std::uint64_t tie_rank = 0;
  std::int64_t demand = 0;
};

std::vector<FlowRun> prepare_runs(const CoflowInstance& inst,
                                  const Assignment& a) {
  FlowSetView flows = FlowSetView::build(inst);
  if (a.flows.size() != flows.all.size())
    throw std::invalid_argument(
        "assignment does not cover the instance's flow set");
  std::vector<FlowRun> runs(flows.all.size());
  for (std::size_t f = 0; f < flows.all.size(); ++f) {
    const AssignedFlow& af = a.flows[f];
    if (!(af.key == flows.all[f].key))
      throw std::invalid_argument("assignment flow keys do not match instance");
    FlowRun& run = runs[f];
    run.key = af.key;
    run.core = af.core;
    run.priority = af.priority;
    run.tie_rank = af.tie_rank;
    run.demand = flows.all[f].size;
    const Rat& release = inst.coflows[af.key.coflow - 1].release;
    run.ready = std::max(release, af.priority);
  }
  return runs;
}

// Scheduling priority: stamp, then tie rank, then the flow total order
// (which is the index order).
bool higher_priority(const FlowRun& a, int ia, const FlowRun& b, int ib) {
  if (a.priority != b.priority) return a.priority < b.priority;
  if (a.tie_rank != b.tie_rank) return a.tie_rank < b.tie_rank;
  return ia < ib;
}

template <class Real>
class Engine {
 public:
  Engine(const CoflowInstance& inst, const std::vector<FlowRun>& runs)
      : inst_(inst), runs_(runs) {
    const int m = inst.num_cores();
    for (int p = 1; p <= m; ++p) speed_.push_back(Arith<Real>::from_rat(inst.speed(p)));
    per_core_.resize(m);
    for (int f = 0; f < static_cast<int>(runs.size()); ++f)
      per_core_[runs[f].core - 1].push_back(f);
    for (auto& order : per_core_)
      std::sort(order.begin(), order.end(), [&](int x, int y) {
        return higher_priority(runs_[x], x, runs_[y], y);
      });
  }

  ScheduleT<Real> run() {
    const int F = static_cast<int>(runs_.size());
    ScheduleT<Real> out;
    out.flow_completion.assign(F, Real{});
    std::vector<Real> remaining(F);
    std::vector<Real> ready(F);
    for (int f = 0; f < F; ++f) {
      remaining[f] = Real(runs_[f].demand);
      ready[f] = Arith<Real>::from_rat(runs_[f].ready);
    }

    std::set<Real> pending_events;  // ready times not yet reached
    for (int f = 0; f < F; ++f) pending_events.insert(ready[f]);
    for (const Coflow& c : inst_.coflows)
      pending_events.insert(Arith<Real>::from_rat(c.release));

    for (int f = 0; f < F; ++f)
      out.trace.push_back({Arith<Real>::from_rat(
                               inst_.coflows[runs_[f].key.coflow - 1].release),
                           runs_[f].core, runs_[f].key, "release"});

    std::vector<bool> active(F, false);
    std::vector<bool> complete(F, false);
    int incomplete = F;
    Real now = *pending_events.begin();
    pending_events.erase(pending_events.begin());

    while (incomplete > 0) {
      // Re-selection: greedy first-fit in priority order per core; a flow
      // is admitted iff both its lanes are unclaimed().
      std::vector<bool> next_active(F, false);
      for (std::size_t p = 0; p < per_core_.size(); ++p) {
        std::set<int> busy_in, busy_out;
        for (int f : per_core_[p]) {
          if (complete[f] || ready[f] > now) continue;
          if (busy_in.count(runs_[f].key.src) ||
              busy_out.count(runs_[f].key.dst))
            continue;
          busy_in.insert(runs_[f].key.src);
          busy_out.insert(runs_[f].key.dst);
          next_active[f] = true;
        }
      }
      for (int f = 0; f < F; ++f) {
        if (next_active[f] && !active[f])
          out.trace.push_back({now, runs_[f].core, runs_[f].key, "start"});
        else if (!next_active[f] && active[f] && !complete[f])
          out.trace.push_back({now, runs_[f].core, runs_[f].key, "pause"});
      }
      active = next_active;

      // Next event: first future ready time or first active completion.
      bool have_next = false;
      Real next{};
      if (!pending_events.empty()) {
        next = *pending_events.begin();
        have_next = true;
      }
      for (int f = 0; f < F; ++f) {
        if (!active[f]) continue;
        Real finish = now + remaining[f] / speed_[runs_[f].core - 1];
        if (!have_next || finish < next) {
          next = finish;
          have_next = true;
        }
      }
      if (!have_next)
        throw std::logic_error("simulator stalled with incomplete flows");

      for (int f = 0; f < F; ++f) {
        if (!active[f]) continue;
        out.segments.push_back({now, next, runs_[f].core, f});
        remaining[f] -= (next - now) * speed_[runs_[f].core - 1];
        if (remaining[f] < Real(0) && !Arith<Real>::done(remaining[f]))
          throw std::logic_error("negative remaining size");
        if (Arith<Real>::done(remaining[f])) {
          complete[f] = true;
          active[f] = false;
          --incomplete;
          out.flow_completion[f] = next;
          out.trace.push_back({next, runs_[f].core, runs_[f].key, "finish"});
        }
      }
      while (!pending_events.empty() && *pending_events.begin() <= next)
        pending_events.erase(pending_events.begin());
      now = next;
    }
    finalize(out);
    return out;
  }

 private:
  void finalize(ScheduleT<Real>& out) {
    out.makespan = Real{};
    out.wct = Real{};
    for (int f = 0; f < static_cast<int>(runs_.size()); ++f) {
      int k = runs_[f].key.coflow;
      auto it = out.coflow_completion.find(k);
      if (it == out.coflow_completion.end())
        out.coflow_completion[k] = out.flow_completion[f];
      else
        it->second = std::max(it->second, out.flow_completion[f]);
    }
    for (const auto& [k, c] : out.coflow_completion) {
      out.makespan = std::max(out.makespan, c);
      out.wct += Arith<Real>::from_rat(inst_.coflows[k - 1].weight) * c;
    }
    std::stable_sort(out.trace.begin(), out.trace.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });
  }

  const CoflowInstance& inst_;
  const std::vector<FlowRun>& runs_;
  std::vector<Real> speed_;
  std::vector<std::vector<int>> per_core_;
};

}  // namespace

Schedule list_schedule(const CoflowInstance& inst, const Assignment& a) {
  auto runs = prepare_runs(inst, a);
  return Engine<Rat>(inst, runs).run();
}

ScheduleD list_schedule_float(const CoflowInstance& inst,
                              const Assignment& a) {
  auto runs = prepare_runs(inst, a);
  return Engine<double>(inst, runs).run();
}

Rat reference_step_for(const CoflowInstance& inst, const Assignment& a) {
  auto runs = prepare_runs(inst, a);
  Rat step = 0;
  for (const FlowRun& run : runs) {
    step = rat_gcd(step, run.ready);
    step = rat_gcd(step, Rat(run.demand) / inst.speed(run.core));
  }
  for (const Coflow& c : inst.coflows) step = rat_gcd(step, c.release);
  if (step == 0) step = 1;
  return step;
}

Schedule reference_unit_step(const CoflowInstance& inst, const Assignment& a,
                             const Rat& step) {
  if (step <= 0) throw std::invalid_argument("step must be positive");
  auto runs = prepare_runs(inst, a);
  auto divides = [&](const Rat& value) {
    Rat q = value / step;
    return denominator(q) == 1;
  };
  for (const FlowRun& run : runs) {
    if (!divides(run.ready) ||
        !divides(Rat(run.demand) / inst.speed(run.core)))
      throw std::invalid_argument(
          "step does not divide the instance's rational data");
  }
  for (const Coflow& c : inst.coflows)
    if (!divides(c.release))
      throw std::invalid_argument(
          "step does not divide the instance's rational data");

  const int F = static_cast<int>(runs.size());
  std::vector<std::vector<int>> per_core(inst.num_cores());
  for (int f = 0; f < F; ++f) per_core[runs[f].core - 1].push_back(f);
  for (auto& order : per_core)
    std::sort(order.begin(), order.end(), [&](int x, int y) {
      return higher_priority(runs[x], x, runs[y], y);
    });

  Schedule out;
  out.flow_completion.assign(F, Rat(0));
  std::vector<Rat> remaining(F);
  std::vector<bool> complete(F, false);
  for (int f = 0; f < F; ++f) remaining[f] = Rat(runs[f].demand);
  int incomplete = F;

  Rat now = 0;
  // Hard stop far beyond any feasible completion.
  Rat guard = time_horizon(inst) + inst.max_release() + 2;
  for (const FlowRun& run : runs) guard = std::max(guard, Rat(run.ready + 1));
  while (incomplete > 0) {
    if (now > guard)
      throw std::logic_error("unit-step simulation exceeded its horizon");
    for (std::size_t p = 0; p < per_core.size(); ++p) {
      std::set<int> busy_in, busy_out;
      for (int f : per_core[p]) {
        if (complete[f] || runs[f].ready > now) continue;
        if (busy_in.count(runs[f].key.src) || busy_out.count(runs[f].key.dst))
          continue;
        busy_in.insert(runs[f].key.src);
        busy_out.insert(runs[f].key.dst);
        out.segments.push_back({now, now + step, runs[f].core, f});
        remaining[f] -= step * inst.speed(runs[f].core);
        if (remaining[f] == 0) {
          complete[f] = true;
          --incomplete;
          out.flow_completion[f] = now + step;
        } else if (remaining[f] < 0) {
          throw std::logic_error("negative remaining size");
        }
      }
    }
    now += step;
  }

  for (int f = 0; f < F; ++f) {
    int k = runs[f].key.coflow;
    auto it = out.coflow_completion.find(k);
    if (it == out.coflow_completion.end())
      out.coflow_completion[k] = out.flow_completion[f];
    else
      it->second = std::max(it->second, out.flow_completion[f]);
  }
  for (const auto& [k, c] : out.coflow_completion) {
    out.makespan = std::max(out.makespan, c);
    out.wct += inst.coflows[k - 1].weight * c;
  }
  return out;
}

ObjectiveValues objective_values(const Schedule& schedule,
                                 const CoflowInstance& inst) {
  Rat wct(0);
  for (const auto& [k, completion] : schedule.coflow_completion)
    wct += inst.coflows[k - 1].weight * completion;
  return {wct, schedule.makespan};
}

ScheduleAudit validate_schedule(const Schedule& schedule,
                                const CoflowInstance& inst,
                                const Assignment& a) {
  ScheduleAudit audit;
  auto runs = prepare_runs(inst, a);
  const int F = static_cast<int>(runs.size());

  auto complain = [&](const Rat& t, const std::string& msg) {
    audit.issues.push_back({t, msg});
  };
  auto flow_name = [&](int f) {
    std::ostringstream os;
    os << "(" << runs[f].key.src << "," << runs[f].key.dst - inst.N << ","
       << runs[f].key.coflow << ")";
    return os.str();
  };

  std::vector<Rat> transmitted(F, Rat(0));
  for (const auto& seg : schedule.segments) {
    if (seg.end <= seg.start) complain(seg.start, "empty or reversed segment");
    const Rat& release = inst.coflows[runs[seg.flow].key.coflow - 1].release;
    if (seg.start < release)
      complain(seg.start,
               "flow " + flow_name(seg.flow) + " transmits before release");
    if (seg.core != runs[seg.flow].core)
      complain(seg.start,
               "flow " + flow_name(seg.flow) + " runs on the wrong core");
    transmitted[seg.flow] += (seg.end - seg.start) * inst.speed(seg.core);
  }
  std::vector<Rat> last_end(F, Rat(0));
  for (const auto& seg : schedule.segments)
    last_end[seg.flow] = std::max(last_end[seg.flow], Rat(seg.end));
  for (int f = 0; f < F; ++f) {
    if (transmitted[f] != Rat(runs[f].demand))
      complain(schedule.flow_completion[f],
               "flow " + flow_name(f) + " transmitted " +
                   rat_to_string(transmitted[f]) + " of " +
                   std::to_string(runs[f].demand));
    if (schedule.flow_completion[f] != last_end[f])
      complain(last_end[f],
               "flow " + flow_name(f) + " records completion " +
                   rat_to_string(schedule.flow_completion[f]) +
                   " but its last segment ends at " +
                   rat_to_string(last_end[f]));
  }

  // Pairwise lane exclusivity per core.
  for (std::size_t s1 = 0; s1 < schedule.segments.size(); ++s1)
    for (std::size_t s2 = s1 + 1; s2 < schedule.segments.size(); ++s2) {
      const auto& x = schedule.segments[s1];
      const auto& y = schedule.segments[s2];
      if (x.core != y.core || x.flow == y.flow) continue;
      if (x.start < y.end && y.start < x.end) {
        const FlowKey& fx = runs[x.flow].key;
        const FlowKey& fy = runs[y.flow].key;
        if (fx.src == fy.src || fx.dst == fy.dst)
          complain(std::max(x.start, y.start),
                   "port conflict between " + flow_name(x.flow) + " and " +
                       flow_name(y.flow));
      }
    }

  // Work conservation: between consecutive boundaries, a ready incomplete
  // flow with both lanes idle on its core must be transmitting.
  std::set<Rat> boundaries;
  for (const auto& seg : schedule.segments) {
    boundaries.insert(seg.start);
    boundaries.insert(seg.end);
  }
  for (const FlowRun& run : runs) boundaries.insert(run.ready);
  std::vector<Rat> points(boundaries.begin(), boundaries.end());
  for (std::size_t b = 0; b + 1 < points.size(); ++b) {
    const Rat& t = points[b];
    for (int f = 0; f < F; ++f) {
      if (runs[f].ready > t || schedule.flow_completion[f] <= t) continue;
      bool self_active = false;
      bool lane_taken = false;
      for (const auto& seg : schedule.segments) {
        if (!(seg.start <= t && t < seg.end)) continue;
        if (seg.flow == f) {
          self_active = true;
          break;
        }
        if (seg.core == runs[f].core &&
            (runs[seg.flow].key.src == runs[f].key.src ||
             runs[seg.flow].key.dst == runs[f].key.dst))
          lane_taken = true;
      }
      if (!self_active && !lane_taken)
        complain(t, "flow " + flow_name(f) +
                        " idles while both of its lanes are free");
    }
  }
  return audit;
}

std::string schedule_summary_json(const Schedule& schedule,
                                  const CoflowInstance& inst) {
  (void)inst;
  json doc;
  json c;
  for (const auto& [k, value] : schedule.coflow_completion)
    c[std::to_string(k)] = to_double(value);
  doc["C"] = c;
  doc["makespan"] = to_double(schedule.makespan);
  doc["wct"] = to_double(schedule.wct);
  return doc.dump(2) + "\n";
}

std::string trace_to_jsonl(const Schedule& schedule, int N) {
  std::ostringstream os;
  for (const auto& ev : schedule.trace) {
    json line;
    line["t"] = to_double(ev.time);
    line["core"] = ev.core;
    line["flow"] = {ev.flow.src, ev.flow.dst - N, ev.flow.coflow};
    line["action"] = ev.action;
    os << line.dump() << "\n";
  }
  return os.str();
}

}  // namespace coflow
