#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coflow/rational.hpp"

namespace coflow {

// A flow moves d units from input port src to output port dst and belongs
// to coflow `coflow`. Ports are 1-based; dst lives in {N+1, ..., 2N}.
struct FlowKey {
  int src = 0;
  int dst = 0;
  int coflow = 0;

  // Total order used for priorities: by coflow, then destination, then
  // source.
  friend bool operator<(const FlowKey& a, const FlowKey& b) {
    if (a.coflow != b.coflow) return a.coflow < b.coflow;
    if (a.dst != b.dst) return a.dst < b.dst;
    return a.src < b.src;
  }
  friend bool operator==(const FlowKey& a, const FlowKey& b) {
    return a.src == b.src && a.dst == b.dst && a.coflow == b.coflow;
  }
};

struct Flow {
  FlowKey key;
  std::int64_t size = 0;  // d_ijk, integer data units
};

struct Coflow {
  Rat weight;
  Rat release;
  std::vector<Flow> flows;  // only positive-demand entries are kept
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string summary, std::vector<std::string> issues)
      : std::runtime_error(std::move(summary)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Validated, immutable problem instance. Construct through validate(),
// generate_random() or load().
struct CoflowInstance {
  int N = 0;                    // ports per side
  std::vector<Rat> speeds;      // s_p, 1-based core index p in [1, m]
  std::vector<Coflow> coflows;  // 1-based coflow index k in [1, n]

  int num_cores() const { return static_cast<int>(speeds.size()); }
  int num_coflows() const { return static_cast<int>(coflows.size()); }
  const Rat& speed(int p) const { return speeds[p - 1]; }
  Rat s_min() const;
  Rat s_max() const;
  Rat max_release() const;
  std::size_t num_flows() const;
};

// Flat, order-sorted view of all positive flows with port/coflow buckets.
struct FlowSetView {
  std::vector<Flow> all;  // sorted by FlowKey order; index = priority rank
  std::map<int, std::vector<int>> by_src;     // i -> indices into `all`
  std::map<int, std::vector<int>> by_dst;     // j -> indices into `all`
  std::map<int, std::vector<int>> by_coflow;  // k -> indices into `all`

  static FlowSetView build(const CoflowInstance& inst);
};

struct PortLoads {
  // L_ik and L_jk keyed by (port, coflow).
  std::map<std::pair<int, int>, std::int64_t> input;
  std::map<std::pair<int, int>, std::int64_t> output;
  Rat s_min;
  Rat s_max;

  static PortLoads build(const CoflowInstance& inst);
  std::int64_t total_input(int i) const;
  std::int64_t total_output(int j) const;
};

// Checks every instance invariant; throws ValidationError listing each
// violation with flow coordinates. Drops zero-demand entries.
CoflowInstance validate(const CoflowInstance& raw);

// T = max_k r_k + (1/s_min)(max_i sum_k L_ik + max_j sum_k L_jk) - 1
Rat time_horizon(const CoflowInstance& inst);

struct GenParams {
  int N = 2;
  int m = 2;
  int n = 2;
  std::vector<std::int64_t> speed_set = {1, 2};
  std::int64_t size_min = 2;
  std::int64_t size_max = 10;
  std::int64_t release_min = 0;
  std::int64_t release_max = 0;
  std::int64_t weight_min = 1;
  std::int64_t weight_max = 5;
  std::uint64_t seed = 0;
};

// Deterministic in params+seed; every coflow gets at least one flow.
CoflowInstance generate_random(const GenParams& params);

// JSON round trip; dst is externalized as 1..N. Unknown fields rejected.
CoflowInstance load_instance(const std::string& path);
void save_instance(const CoflowInstance& inst, const std::string& path);
CoflowInstance instance_from_json_text(const std::string& text);
std::string instance_to_json_text(const CoflowInstance& inst);

}  // namespace coflow
