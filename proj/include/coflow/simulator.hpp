#pragma once

#include <map>
#include <string>
#include <vector>

#include "coflow/instance.hpp"
#include "coflow/rounding.hpp"

namespace coflow {

// Execution trace of a list schedule. Real is double for bulk runs and
// Rat for certification; completion times are exact in rational mode.
template <class Real>
struct ScheduleT {
  struct Segment {
    Real start{};
    Real end{};
    int core = 0;
    int flow = 0;  // index into FlowSetView order
  };
  struct Event {
    Real time{};
    int core = 0;
    FlowKey flow;
    std::string action;  // release | start | pause | finish
  };

  std::vector<Real> flow_completion;      // by flow index
  std::map<int, Real> coflow_completion;  // C_k
  Real makespan{};
  Real wct{};
  std::vector<Segment> segments;
  std::vector<Event> trace;
};

using Schedule = ScheduleT<Rat>;
using ScheduleD = ScheduleT<double>;

// Preemptive event-driven list schedule. At every event each core drops
// its selection and greedily re-admits ready incomplete flows in priority
// order (t_ijk, tie rank, flow order), one flow per input and output lane.
// A flow becomes ready at max(r_k, t_ijk).
Schedule list_schedule(const CoflowInstance& inst, const Assignment& a);
ScheduleD list_schedule_float(const CoflowInstance& inst,
                              const Assignment& a);

// Fixed-increment oracle applying the identical greedy rule each step.
// Requires step to divide all releases, ready stamps and assigned d/s_p.
Schedule reference_unit_step(const CoflowInstance& inst, const Assignment& a,
                             const Rat& step);

// Largest step that satisfies the reference_unit_step precondition.
Rat reference_step_for(const CoflowInstance& inst, const Assignment& a);

struct ObjectiveValues {
  Rat wct;
  Rat makespan;
};
ObjectiveValues objective_values(const Schedule& schedule,
                                 const CoflowInstance& inst);

struct ScheduleAuditIssue {
  Rat time;
  std::string message;
};
struct ScheduleAudit {
  std::vector<ScheduleAuditIssue> issues;
  bool ok() const { return issues.empty(); }
};

// Checks release respect, per-lane exclusivity, completion accounting and
// work conservation against the segment trace.
ScheduleAudit validate_schedule(const Schedule& schedule,
                                const CoflowInstance& inst,
                                const Assignment& a);

std::string schedule_summary_json(const Schedule& schedule,
                                  const CoflowInstance& inst);
std::string trace_to_jsonl(const Schedule& schedule, int N);

}  // namespace coflow
