#include "coflow/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace coflow {
namespace {

using json = nlohmann::ordered_json;

constexpr double kSupportEps = 1e-12;

}  // namespace

Rat eta_from_epsilon(const Rat& epsilon, RoundingMode mode) {
  if (epsilon <= 0)
    throw std::invalid_argument("epsilon must be positive");
  return mode == RoundingMode::Randomized ? epsilon : epsilon / 2;
}

EstimatorContext::EstimatorContext(const LpModel& model,
                                   const LpSolution& sol)
    : model_(&model) {
  const FlowSetView& flows = model.flows;
  const int F = static_cast<int>(flows.all.size());
  const int m = model.instance.num_cores();
  levels_ = model.grid.count() + 1;

  for (int p = 1; p <= m; ++p)
    speeds_.push_back(to_double(model.instance.speed(p)));
  for (const Coflow& c : model.instance.coflows)
    weights_.push_back(to_double(c.weight));

  supports_.resize(F);
  neighbors_.resize(F);
  ycum_.assign(F, std::vector<double>(m * levels_, 0.0));
  yat_.assign(F, std::vector<double>(m * levels_, 0.0));
  demand_.resize(F);

  for (int f = 0; f < F; ++f) {
    demand_[f] = static_cast<double>(flows.all[f].size);
    double total = 0.0;
    std::vector<Candidate> cands;
    for (int col : model.flow_vars[f]) {
      const VarKey& v = model.vars[col];
      double prob = probability_coefficient(model.instance.speed(v.core),
                                            flows.all[f].size, v.interval,
                                            model.grid) *
                    sol.y[col];
      yat_[f][slot(v.core, v.interval)] =
          sol.y[col] * model.grid.length_d(v.interval);
      if (prob > kSupportEps) {
        cands.push_back({v.core, v.interval, prob, sol.y[col]});
        total += prob;
      }
    }
    if (cands.empty())
      throw SolveError("flow has empty rounding support");
    for (Candidate& c : cands) c.probability /= total;
    supports_[f] = std::move(cands);
    for (int p = 1; p <= m; ++p) {
      double run = 0.0;
      for (int l = 0; l < levels_; ++l) {
        ycum_[f][slot(p, l)] = run;
        run += yat_[f][slot(p, l)];
      }
    }
  }

  for (int f = 0; f < F; ++f) {
    const FlowKey& key = flows.all[f].key;
    for (int g = 0; g < F; ++g) {
      if (g == f) continue;
      const FlowKey& other = flows.all[g].key;
      if (other.src == key.src || other.dst == key.dst)
        neighbors_[f].push_back(g);
    }
  }
}

double EstimatorContext::base(int f, int p, int l) const {
  double b = demand_[f] / speeds_[p - 1];
  if (l > 0) b += model_->grid.notational_left_d(l);
  return b;
}

double EstimatorContext::completion_estimate(const PartialState& state,
                                             int f, int core,
                                             int interval) const {
  double value = base(f, core, interval);
  for (int g : neighbors_[f]) {
    if (state[g]) {
      auto [pg, lg] = *state[g];
      if (pg == core &&
          (lg < interval || (lg == interval && g < f)))
        value += demand_[g] / speeds_[core - 1];
    } else {
      value += y_before(g, core, interval);
      if (g < f) value += y_at(g, core, interval);
    }
  }
  return value;
}

double estimator_D(const EstimatorContext& ctx, const PartialState& state,
                   int f, int core, int interval) {
  if (state[f]) throw std::invalid_argument("estimator_D: flow is assigned");
  return ctx.completion_estimate(state, f, core, interval);
}

double estimator_E(const EstimatorContext& ctx, const PartialState& state,
                   int f) {
  if (!state[f])
    throw std::invalid_argument("estimator_E: flow is unassigned");
  auto [p, l] = *state[f];
  return ctx.completion_estimate(state, f, p, l);
}

namespace {

// Expected completion of flow f under the current partial assignment:
// probability-weighted D for fractional flows, E at the fixed pair for
// assigned flows.
double flow_value(const EstimatorContext& ctx, const PartialState& state,
                  int f) {
  if (state[f]) return estimator_E(ctx, state, f);
  double v = 0.0;
  for (const auto& c : ctx.support(f))
    v += c.probability * ctx.completion_estimate(state, f, c.core, c.interval);
  return v;
}

}  // namespace

double cond_exp_total_wct(const EstimatorContext& ctx,
                          const PartialState& state) {
  const LpModel& model = ctx.model();
  double total = 0.0;
  for (const auto& [k, members] : model.flows.by_coflow) {
    double worst = 0.0;
    for (int f : members)
      worst = std::max(worst, flow_value(ctx, state, f));
    total += ctx.weight_of_coflow(k) * worst;
  }
  return total;
}

double cond_exp_makespan(const EstimatorContext& ctx,
                         const PartialState& state) {
  double worst = 0.0;
  for (int f = 0; f < ctx.num_flows(); ++f)
    worst = std::max(worst, flow_value(ctx, state, f));
  return worst;
}

Assignment sample_assignment(const LpModel& model, const LpSolution& sol,
                             std::uint64_t seed) {
  EstimatorContext ctx(model, sol);
  std::mt19937_64 rng(seed);
  Assignment out;
  out.mode = RoundingMode::Randomized;
  out.seed = seed;
  out.eta = model.grid.eta();
  const int F = ctx.num_flows();
  for (int f = 0; f < F; ++f) {
    double u = static_cast<double>(rng()) /
               (static_cast<double>(std::mt19937_64::max()) + 1.0);
    const auto& support = ctx.support(f);
    const EstimatorContext::Candidate* picked = &support.back();
    double acc = 0.0;
    for (const auto& c : support) {
      acc += c.probability;
      if (u < acc) {
        picked = &c;
        break;
      }
    }
    AssignedFlow af;
    af.key = model.flows.all[f].key;
    af.core = picked->core;
    af.interval = picked->interval;
    af.priority = model.grid.priority_stamp(picked->interval);
    af.tie_rank = rng();
    out.flows.push_back(af);
  }
  return out;
}

namespace {

// Incremental greedy derandomizer. Maintains the current estimate of every
// flow's expected completion and applies O(neighbors x support) deltas when
// a flow's assignment is fixed, instead of re-deriving every estimator
// from scratch at each step.
class Derandomizer {
 public:
  Derandomizer(const LpModel& model, const LpSolution& sol, Objective kind)
      : ctx_(model, sol), kind_(kind), F_(ctx_.num_flows()) {
    state_.assign(F_, std::nullopt);
    dval_.resize(F_);
    value_.resize(F_);
    for (int f = 0; f < F_; ++f) {
      const auto& support = ctx_.support(f);
      dval_[f].resize(support.size());
      double expected = 0.0;
      for (std::size_t s = 0; s < support.size(); ++s) {
        dval_[f][s] = ctx_.completion_estimate(state_, f, support[s].core,
                                               support[s].interval);
        expected += support[s].probability * dval_[f][s];
      }
      value_[f] = expected;
    }
  }

  std::pair<Assignment, EstimatorReport> run() {
    Assignment out;
    out.mode = RoundingMode::Deterministic;
    out.eta = ctx_.model().grid.eta();
    EstimatorReport report;
    for (int f = 0; f < F_; ++f) {
      EstimatorStep step;
      step.flow = ctx_.model().flows.all[f].key;
      step.parent_value = aggregate();

      const auto& support = ctx_.support(f);
      int best = -1;
      double best_value = 0.0;
      double weighted = 0.0;
      for (std::size_t s = 0; s < support.size(); ++s) {
        double v = evaluate_candidate(f, static_cast<int>(s));
        step.children.push_back({support[s].core, support[s].interval,
                                 support[s].probability, v});
        weighted += support[s].probability * v;
        if (best == -1 || v < best_value) {
          best = static_cast<int>(s);
          best_value = v;
        }
      }
      commit(f, best);
      step.chosen_core = support[best].core;
      step.chosen_interval = support[best].interval;
      step.chosen_value = best_value;
      step.weighted_average = weighted;
      report.steps.push_back(std::move(step));

      AssignedFlow af;
      af.key = ctx_.model().flows.all[f].key;
      af.core = support[best].core;
      af.interval = support[best].interval;
      af.priority = ctx_.model().grid.priority_stamp(support[best].interval);
      out.flows.push_back(af);
    }
    report.final_value = aggregate();
    return {std::move(out), std::move(report)};
  }

 private:
  // Work contributed by flow f, once fixed at (core, interval), to a
  // neighbor's estimate at (p, l), minus the fractional contribution it
  // made while unassigned.
  double contribution_delta(int f, int core, int interval, int g, int p,
                            int l) const {
    double assigned = 0.0;
    if (p == core && (interval < l || (interval == l && f < g)))
      assigned = ctx_.demand(f) / ctx_.speed(p);
    double fractional = ctx_.y_before(f, p, l);
    if (f < g) fractional += ctx_.y_at(f, p, l);
    return assigned - fractional;
  }

  double evaluate_candidate(int f, int s) {
    const auto& cand = ctx_.support(f)[s];
    ++epoch_;
    set_override(f, dval_[f][s]);
    for (int g : ctx_.neighbors(f)) {
      if (state_[g]) {
        auto [pg, lg] = *state_[g];
        set_override(g, value_[g] + contribution_delta(f, cand.core,
                                                       cand.interval, g, pg,
                                                       lg));
      } else {
        const auto& gs = ctx_.support(g);
        double v = value_[g];
        for (const auto& c : gs)
          v += c.probability * contribution_delta(f, cand.core, cand.interval,
                                                  g, c.core, c.interval);
        set_override(g, v);
      }
    }
    return aggregate();
  }

  void commit(int f, int s) {
    const auto& cand = ctx_.support(f)[s];
    for (int g : ctx_.neighbors(f)) {
      if (state_[g]) {
        auto [pg, lg] = *state_[g];
        value_[g] += contribution_delta(f, cand.core, cand.interval, g, pg, lg);
      } else {
        const auto& gs = ctx_.support(g);
        double v = 0.0;
        for (std::size_t t = 0; t < gs.size(); ++t) {
          dval_[g][t] += contribution_delta(f, cand.core, cand.interval, g,
                                            gs[t].core, gs[t].interval);
          v += gs[t].probability * dval_[g][t];
        }
        value_[g] = v;
      }
    }
    value_[f] = dval_[f][s];
    state_[f] = {cand.core, cand.interval};
    ++epoch_;  // drop any pending overrides
  }

  void set_override(int f, double v) {
    if (ovr_epoch_.empty()) {
      ovr_epoch_.assign(F_, 0);
      ovr_val_.assign(F_, 0.0);
    }
    ovr_epoch_[f] = epoch_;
    ovr_val_[f] = v;
  }

  double current(int f) const {
    if (!ovr_epoch_.empty() && ovr_epoch_[f] == epoch_) return ovr_val_[f];
    return value_[f];
  }

  double aggregate() const {
    if (kind_ == Objective::Makespan) {
      double worst = 0.0;
      for (int f = 0; f < F_; ++f) worst = std::max(worst, current(f));
      return worst;
    }
    double total = 0.0;
    for (const auto& [k, members] : ctx_.model().flows.by_coflow) {
      double worst = 0.0;
      for (int f : members) worst = std::max(worst, current(f));
      total += ctx_.weight_of_coflow(k) * worst;
    }
    return total;
  }

  EstimatorContext ctx_;
  Objective kind_;
  int F_;
  PartialState state_;
  std::vector<std::vector<double>> dval_;
  std::vector<double> value_;
  std::vector<int> ovr_epoch_;
  std::vector<double> ovr_val_;
  int epoch_ = 1;
};

}  // namespace

std::pair<Assignment, EstimatorReport> derandomize_wct(
    const LpModel& model, const LpSolution& sol) {
  return Derandomizer(model, sol, Objective::Wct).run();
}

std::pair<Assignment, EstimatorReport> derandomize_makespan(
    const LpModel& model, const LpSolution& sol) {
  return Derandomizer(model, sol, Objective::Makespan).run();
}

std::vector<double> initial_expectation_report(const EstimatorContext& ctx) {
  PartialState none(ctx.num_flows(), std::nullopt);
  std::vector<double> out;
  for (const auto& [k, members] : ctx.model().flows.by_coflow) {
    double worst = 0.0;
    for (int f : members) worst = std::max(worst, flow_value(ctx, none, f));
    out.push_back(worst);
  }
  return out;
}

std::string assignment_to_json_text(const Assignment& a, int N) {
  json doc;
  doc["mode"] = a.mode == RoundingMode::Randomized ? "randomized"
                                                   : "deterministic";
  if (a.mode == RoundingMode::Randomized) doc["seed"] = a.seed;
  if (a.epsilon != 0) doc["epsilon"] = rat_to_string(a.epsilon);
  doc["eta"] = rat_to_string(a.eta);
  doc["flows"] = json::array();
  for (const AssignedFlow& f : a.flows) {
    json fl;
    fl["i"] = f.key.src;
    fl["j"] = f.key.dst - N;
    fl["k"] = f.key.coflow;
    fl["p"] = f.core;
    fl["l"] = f.interval;
    fl["t"] = to_double(f.priority);
    if (a.mode == RoundingMode::Randomized) fl["tie"] = f.tie_rank;
    doc["flows"].push_back(fl);
  }
  return doc.dump(2) + "\n";
}

Assignment assignment_from_json_text(const std::string& text,
                                     const CoflowInstance& inst) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("assignment parse error: ") + e.what());
  }
  Assignment a;
  std::string mode = doc.at("mode").get<std::string>();
  a.mode = mode == "randomized" ? RoundingMode::Randomized
                                : RoundingMode::Deterministic;
  if (doc.contains("seed")) a.seed = doc.at("seed").get<std::uint64_t>();
  auto rat_of = [](const json& v) {
    return v.is_string() ? parse_decimal(v.get<std::string>())
                         : parse_decimal(v.dump());
  };
  if (doc.contains("epsilon")) a.epsilon = rat_of(doc.at("epsilon"));
  a.eta = rat_of(doc.at("eta"));

  // Priorities are recomputed exactly from the grid rather than trusted
  // from the (floating) "t" field.
  IntervalGrid grid = IntervalGrid::build(time_horizon(inst), a.eta);
  for (const json& fl : doc.at("flows")) {
    AssignedFlow f;
    f.key.src = fl.at("i").get<int>();
    f.key.dst = inst.N + fl.at("j").get<int>();
    f.key.coflow = fl.at("k").get<int>();
    f.core = fl.at("p").get<int>();
    f.interval = fl.at("l").get<int>();
    if (f.interval < 0 || f.interval > grid.count())
      throw ParseError("assignment: interval index out of range");
    f.priority = grid.priority_stamp(f.interval);
    if (fl.contains("tie")) f.tie_rank = fl.at("tie").get<std::uint64_t>();
    a.flows.push_back(f);
  }
  std::sort(a.flows.begin(), a.flows.end(),
            [](const AssignedFlow& x, const AssignedFlow& y) {
              return x.key < y.key;
            });
  return a;
}

void save_assignment(const Assignment& a, int N, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << assignment_to_json_text(a, N);
}

Assignment load_assignment(const std::string& path,
                           const CoflowInstance& inst) {
  std::ifstream in(path);
  if (!in) throw ParseError("file not found: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return assignment_from_json_text(buffer.str(), inst);
}

std::string estimator_report_to_jsonl(const EstimatorReport& report, int N) {
  std::ostringstream os;
  for (const EstimatorStep& step : report.steps) {
    json line;
    line["flow"] = {step.flow.src, step.flow.dst - N, step.flow.coflow};
    line["parent"] = step.parent_value;
    line["children"] = json::array();
    for (const auto& c : step.children)
      line["children"].push_back(
          {{"p", c.core}, {"l", c.interval}, {"prob", c.probability},
           {"value", c.value}});
    line["chosen"] = {{"p", step.chosen_core}, {"l", step.chosen_interval}};
    line["chosen_value"] = step.chosen_value;
    line["weighted_average"] = step.weighted_average;
    os << line.dump() << "\n";
  }
  return os.str();
}

}  // namespace coflow
