#include "coflow/instance.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace coflow {
namespace {

using json = nlohmann::ordered_json;

std::string flow_coord(const FlowKey& key, int N) {
  std::ostringstream os;
  os << "(i=" << key.src << ", j=" << key.dst - N << ", k=" << key.coflow
     << ")";
  return os.str();
}

// Accepts a JSON integer or a decimal string; anything else is an error.
Rat rat_field(const json& value, const std::string& where) {
  if (value.is_number_integer())
    return Rat(static_cast<std::int64_t>(value.get<std::int64_t>()));
  if (value.is_string()) {
    try {
      return parse_decimal(value.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  throw ParseError(where + ": expected integer or decimal string");
}

std::int64_t int_field(const json& value, const std::string& where) {
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_string()) {
    Rat r = rat_field(value, where);
    if (denominator(r) != 1)
      throw ParseError(where + ": demand must be integer");
    return numerator(r).convert_to<std::int64_t>();
  }
  throw ParseError(where + ": demand must be integer");
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find_if(known.begin(), known.end(), [&](const char* k) {
          return key == k;
        }) == known.end())
      throw ParseError(where + ": unknown field \"" + key + "\"");
  }
}

}  // namespace

Rat CoflowInstance::s_min() const {
  Rat best = speeds.front();
  for (const Rat& s : speeds) best = std::min(best, s);
  return best;
}

Rat CoflowInstance::s_max() const {
  Rat best = speeds.front();
  for (const Rat& s : speeds) best = std::max(best, s);
  return best;
}

Rat CoflowInstance::max_release() const {
  Rat best = 0;
  for (const Coflow& c : coflows) best = std::max(best, c.release);
  return best;
}

std::size_t CoflowInstance::num_flows() const {
  std::size_t total = 0;
  for (const Coflow& c : coflows) total += c.flows.size();
  return total;
}

FlowSetView FlowSetView::build(const CoflowInstance& inst) {
  FlowSetView view;
  for (const Coflow& c : inst.coflows)
    for (const Flow& f : c.flows) view.all.push_back(f);
  std::sort(view.all.begin(), view.all.end(),
            [](const Flow& a, const Flow& b) { return a.key < b.key; });
  for (int idx = 0; idx < static_cast<int>(view.all.size()); ++idx) {
    const FlowKey& key = view.all[idx].key;
    view.by_src[key.src].push_back(idx);
    view.by_dst[key.dst].push_back(idx);
    view.by_coflow[key.coflow].push_back(idx);
  }
  return view;
}

PortLoads PortLoads::build(const CoflowInstance& inst) {
  PortLoads loads;
  loads.s_min = inst.s_min();
  loads.s_max = inst.s_max();
  for (int k = 1; k <= inst.num_coflows(); ++k) {
    for (const Flow& f : inst.coflows[k - 1].flows) {
      loads.input[{f.key.src, k}] += f.size;
      loads.output[{f.key.dst, k}] += f.size;
    }
  }
  return loads;
}

std::int64_t PortLoads::total_input(int i) const {
  std::int64_t total = 0;
  for (const auto& [key, load] : input)
    if (key.first == i) total += load;
  return total;
}

std::int64_t PortLoads::total_output(int j) const {
  std::int64_t total = 0;
  for (const auto& [key, load] : output)
    if (key.first == j) total += load;
  return total;
}

CoflowInstance validate(const CoflowInstance& raw) {
  std::vector<std::string> issues;
  if (raw.N < 1) issues.push_back("N must be at least 1");
  if (raw.speeds.empty()) issues.push_back("at least one core required");
  if (raw.coflows.empty()) issues.push_back("at least one coflow required");
  for (std::size_t p = 0; p < raw.speeds.size(); ++p)
    if (raw.speeds[p] <= 0) {
      std::ostringstream os;
      os << "core " << p + 1 << ": speed must be positive";
      issues.push_back(os.str());
    }

  Rat smax = 0;
  for (const Rat& s : raw.speeds) smax = std::max(smax, s);

  CoflowInstance inst;
  inst.N = raw.N;
  inst.speeds = raw.speeds;
  for (int k = 1; k <= static_cast<int>(raw.coflows.size()); ++k) {
    const Coflow& src = raw.coflows[k - 1];
    Coflow out;
    out.weight = src.weight;
    out.release = src.release;
    if (src.weight <= 0) {
      std::ostringstream os;
      os << "coflow " << k << ": weight must be positive";
      issues.push_back(os.str());
    }
    if (src.release < 0) {
      std::ostringstream os;
      os << "coflow " << k << ": release must be nonnegative";
      issues.push_back(os.str());
    }
    bool any_positive = false;
    for (const Flow& f : src.flows) {
      if (f.key.coflow != k) {
        issues.push_back("coflow " + std::to_string(k) +
                         ": flow tagged with wrong coflow index");
        continue;
      }
      if (f.key.src < 1 || f.key.src > raw.N ||
          f.key.dst < raw.N + 1 || f.key.dst > 2 * raw.N) {
        issues.push_back("flow " + flow_coord(f.key, raw.N) +
                         ": port out of range");
        continue;
      }
      if (f.size < 0) {
        issues.push_back("flow " + flow_coord(f.key, raw.N) +
                         ": demand must be nonnegative");
        continue;
      }
      if (f.size == 0) continue;  // zero-demand entries are dropped
      if (smax > 0 && Rat(f.size) < smax) {
        std::ostringstream os;
        os << "flow " << flow_coord(f.key, raw.N)
           << ": d/s_max = " << to_double(Rat(f.size) / smax) << " < 1";
        issues.push_back(os.str());
      }
      any_positive = true;
      out.flows.push_back(f);
    }
    if (!any_positive)
      issues.push_back("coflow " + std::to_string(k) +
                       ": must contain at least one positive flow");
    std::sort(out.flows.begin(), out.flows.end(),
              [](const Flow& a, const Flow& b) { return a.key < b.key; });
    inst.coflows.push_back(std::move(out));
  }

  if (!issues.empty()) {
    std::string summary = "invalid instance: " + issues.front();
    if (issues.size() > 1)
      summary += " (+" + std::to_string(issues.size() - 1) + " more)";
    throw ValidationError(summary, issues);
  }
  return inst;
}

Rat time_horizon(const CoflowInstance& inst) {
  PortLoads loads = PortLoads::build(inst);
  std::int64_t max_in = 0;
  std::int64_t max_out = 0;
  for (int i = 1; i <= inst.N; ++i)
    max_in = std::max(max_in, loads.total_input(i));
  for (int j = inst.N + 1; j <= 2 * inst.N; ++j)
    max_out = std::max(max_out, loads.total_output(j));
  return inst.max_release() +
         Rat(max_in + max_out) / inst.s_min() - 1;
}

CoflowInstance generate_random(const GenParams& params) {
  if (params.N < 1 || params.m < 1 || params.n < 1 ||
      params.speed_set.empty() || params.size_min > params.size_max ||
      params.release_min > params.release_max ||
      params.weight_min > params.weight_max)
    throw ValidationError("infeasible generator parameters", {});
  std::int64_t smax = *std::max_element(params.speed_set.begin(),
                                        params.speed_set.end());
  if (params.size_min < smax)
    throw ValidationError(
        "infeasible generator parameters: min size " +
            std::to_string(params.size_min) + " < s_max " +
            std::to_string(smax),
        {});

  std::mt19937_64 rng(params.seed);
  auto draw = [&rng](std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };

  CoflowInstance inst;
  inst.N = params.N;
  for (int p = 0; p < params.m; ++p) {
    std::int64_t s =
        params.speed_set[rng() % params.speed_set.size()];
    inst.speeds.push_back(Rat(s));
  }
  for (int k = 1; k <= params.n; ++k) {
    Coflow c;
    c.weight = Rat(draw(params.weight_min, params.weight_max));
    c.release = Rat(draw(params.release_min, params.release_max));
    for (int i = 1; i <= params.N; ++i)
      for (int j = 1; j <= params.N; ++j)
        if (rng() % 2 == 0)
          c.flows.push_back(
              {{i, params.N + j, k}, draw(params.size_min, params.size_max)});
    if (c.flows.empty()) {
      int i = static_cast<int>(draw(1, params.N));
      int j = static_cast<int>(draw(1, params.N));
      c.flows.push_back(
          {{i, params.N + j, k}, draw(params.size_min, params.size_max)});
    }
    inst.coflows.push_back(std::move(c));
  }
  return validate(inst);
}

CoflowInstance instance_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("instance parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("instance: top level must be object");
  reject_unknown(doc, {"N", "cores", "coflows"}, "instance");
  if (!doc.contains("N") || !doc.contains("cores") || !doc.contains("coflows"))
    throw ParseError("instance: N, cores and coflows are required");

  CoflowInstance raw;
  raw.N = doc.at("N").get<int>();
  for (const json& core : doc.at("cores")) {
    reject_unknown(core, {"speed"}, "core");
    raw.speeds.push_back(rat_field(core.at("speed"), "core speed"));
  }
  int k = 0;
  for (const json& cf : doc.at("coflows")) {
    ++k;
    reject_unknown(cf, {"weight", "release", "flows"},
                   "coflow " + std::to_string(k));
    Coflow c;
    c.weight = rat_field(cf.at("weight"), "coflow weight");
    c.release = cf.contains("release")
                    ? rat_field(cf.at("release"), "coflow release")
                    : Rat(0);
    for (const json& fl : cf.at("flows")) {
      reject_unknown(fl, {"src", "dst", "size"}, "flow");
      Flow f;
      f.key.src = fl.at("src").get<int>();
      // dst is stored externally as 1..N and offset internally to N+1..2N
      int dst_external = fl.at("dst").get<int>();
      if (dst_external < 1 || dst_external > raw.N)
        throw ParseError("flow: dst " + std::to_string(dst_external) +
                         " out of range 1.." + std::to_string(raw.N));
      f.key.dst = raw.N + dst_external;
      f.key.coflow = k;
      f.size = int_field(fl.at("size"), "flow size");
      c.flows.push_back(f);
    }
    raw.coflows.push_back(std::move(c));
  }
  return validate(raw);
}

std::string instance_to_json_text(const CoflowInstance& inst) {
  json doc;
  doc["N"] = inst.N;
  doc["cores"] = json::array();
  for (const Rat& s : inst.speeds) {
    json core;
    if (denominator(s) == 1)
      core["speed"] = numerator(s).convert_to<std::int64_t>();
    else
      core["speed"] = rat_to_string(s);
    doc["cores"].push_back(core);
  }
  doc["coflows"] = json::array();
  for (const Coflow& c : inst.coflows) {
    json cf;
    if (denominator(c.weight) == 1)
      cf["weight"] = numerator(c.weight).convert_to<std::int64_t>();
    else
      cf["weight"] = rat_to_string(c.weight);
    if (denominator(c.release) == 1)
      cf["release"] = numerator(c.release).convert_to<std::int64_t>();
    else
      cf["release"] = rat_to_string(c.release);
    cf["flows"] = json::array();
    for (const Flow& f : c.flows) {
      json fl;
      fl["src"] = f.key.src;
      fl["dst"] = f.key.dst - inst.N;
      fl["size"] = f.size;
      cf["flows"].push_back(fl);
    }
    doc["coflows"].push_back(cf);
  }
  return doc.dump(2) + "\n";
}

CoflowInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("file not found: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return instance_from_json_text(buffer.str());
}

void save_instance(const CoflowInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << instance_to_json_text(inst);
}

}  // namespace coflow
