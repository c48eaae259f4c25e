#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cotctl/error.hpp"
#include "cotctl/simulator.hpp"

namespace cotctl {

void ThresholdTable::validate() const {
  auto check = [](const Cuts& c, const char* what) {
    if (!(c.lower < c.upper)) {
      throw ConfigError(std::string("bin cuts for ") + what + " must be strictly increasing");
    }
  };
  check(cpu, "cpu");
  check(mem, "mem");
  check(latency, "latency");
  check(rps, "rps");
  if (!(slo_ms > 0.0)) throw ConfigError("slo_ms must be positive");
  for (const auto& [id, slo] : service_slo_ms) {
    if (!(slo > 0.0)) throw ConfigError("slo_ms of service " + std::to_string(id) + " must be positive");
  }
}

}  // namespace cotctl

namespace cotctl::sim {

using nlohmann::json;

std::string_view to_string(FaultType t) {
  switch (t) {
    case FaultType::CpuHog: return "CpuHog";
    case FaultType::MemLeak: return "MemLeak";
    case FaultType::NetDelay: return "NetDelay";
  }
  return "?";
}

std::optional<FaultType> parse_fault_type(std::string_view s) {
  if (s == "CpuHog") return FaultType::CpuHog;
  if (s == "MemLeak") return FaultType::MemLeak;
  if (s == "NetDelay") return FaultType::NetDelay;
  return std::nullopt;
}

ResourceType root_cause_resource(FaultType t) {
  switch (t) {
    case FaultType::CpuHog: return ResourceType::Cpu;
    case FaultType::MemLeak: return ResourceType::Memory;
    case FaultType::NetDelay: return ResourceType::Network;
  }
  return ResourceType::Cpu;
}

// --- WorkloadTrace ---------------------------------------------------------

double WorkloadTrace::rate_at(Tick t) const {
  if (points.empty()) return 0.0;
  auto it = std::upper_bound(points.begin(), points.end(), t,
                             [](Tick v, const auto& p) { return v < p.first; });
  if (it == points.begin()) return points.front().second;
  return std::prev(it)->second;
}

void WorkloadTrace::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].second >= 0.0)) {
      throw ConfigError("workload rate at tick " + std::to_string(points[i].first) +
                        " must be non-negative");
    }
    if (i > 0 && points[i].first <= points[i - 1].first) {
      throw ConfigError("workload ticks must be strictly increasing");
    }
  }
}

WorkloadTrace WorkloadTrace::from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("workload csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "tick,rps") throw ConfigError("workload csv header must be 'tick,rps'");
  WorkloadTrace trace;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ConfigError("workload csv line " + std::to_string(lineno) + ": expected 'tick,rps'");
    }
    try {
      std::size_t used = 0;
      const std::string tick_s = line.substr(0, comma);
      const long long tick = std::stoll(tick_s, &used);
      if (used != tick_s.size()) throw std::invalid_argument("tick");
      const std::string rps_s = line.substr(comma + 1);
      const double rps = std::stod(rps_s, &used);
      if (used != rps_s.size()) throw std::invalid_argument("rps");
      trace.points.emplace_back(tick, rps);
    } catch (const std::logic_error&) {
      throw ConfigError("workload csv line " + std::to_string(lineno) + ": malformed number");
    }
  }
  trace.validate();
  return trace;
}

void WorkloadTrace::to_csv(std::ostream& out) const {
  out << "tick,rps\n";
  for (const auto& [tick, rps] : points) out << tick << ',' << rps << '\n';
}

// --- Topology --------------------------------------------------------------

Topology::Topology(std::vector<Machine> machines, std::vector<ServiceSpec> services,
                   std::optional<ServiceId> entry)
    : machines_(std::move(machines)), services_(std::move(services)) {
  if (machines_.empty()) throw ConfigError("topology needs at least one machine");
  if (services_.empty()) throw ConfigError("topology needs at least one service");

  std::set<MachineId> machine_ids;
  for (const auto& m : machines_) {
    if (m.cpu_capacity <= 0 || m.mem_capacity <= 0) {
      throw ConfigError("machine " + std::to_string(m.id) + " must have positive capacity");
    }
    if (!machine_ids.insert(m.id).second) {
      throw ConfigError("duplicate machine id " + std::to_string(m.id));
    }
  }
  std::sort(machines_.begin(), machines_.end(),
            [](const Machine& a, const Machine& b) { return a.id < b.id; });

  std::sort(services_.begin(), services_.end(),
            [](const ServiceSpec& a, const ServiceSpec& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < services_.size(); ++i) {
    const auto& s = services_[i];
    if (s.id < 1 || s.id > kMaxServiceId) {
      throw ConfigError("service id " + std::to_string(s.id) + " outside 1.." +
                        std::to_string(kMaxServiceId));
    }
    if (i > 0 && services_[i - 1].id == s.id) {
      throw ConfigError("duplicate service id " + std::to_string(s.id));
    }
    if (!(s.base_service_rate > 0.0)) {
      throw ConfigError("service " + std::to_string(s.id) + ": base_service_rate must be positive");
    }
    if (s.cpu_request <= 0 || s.mem_request <= 0) {
      throw ConfigError("service " + std::to_string(s.id) + ": resource requests must be positive");
    }
    if (!(s.readiness_time >= 0.0)) {
      throw ConfigError("service " + std::to_string(s.id) + ": readiness_time must be >= 0");
    }
    if (!(s.base_mem_utilization >= 0.0 && s.base_mem_utilization < 1.0)) {
      throw ConfigError("service " + std::to_string(s.id) +
                        ": base_mem_utilization must be in [0, 1)");
    }
  }

  upstream_.assign(services_.size(), {});
  for (const auto& s : services_) {
    std::set<ServiceId> seen;
    for (ServiceId callee : s.downstream) {
      if (callee == s.id) {
        throw ConfigError("call graph cycle: service " + std::to_string(s.id) + " calls itself");
      }
      if (!has_service(callee)) {
        throw ConfigError("service " + std::to_string(s.id) + " calls unknown service " +
                          std::to_string(callee));
      }
      if (!seen.insert(callee).second) {
        throw ConfigError("service " + std::to_string(s.id) + " lists callee " +
                          std::to_string(callee) + " twice");
      }
      upstream_[index_of(callee)].push_back(s.id);
    }
  }
  for (auto& callers : upstream_) std::sort(callers.begin(), callers.end());

  // Kahn's algorithm; smallest id first keeps the order deterministic.
  std::vector<int> indegree(services_.size(), 0);
  for (std::size_t i = 0; i < services_.size(); ++i) {
    indegree[i] = static_cast<int>(upstream_[i].size());
  }
  std::set<std::size_t> frontier;
  for (std::size_t i = 0; i < services_.size(); ++i) {
    if (indegree[i] == 0) frontier.insert(i);
  }
  while (!frontier.empty()) {
    const std::size_t i = *frontier.begin();
    frontier.erase(frontier.begin());
    topo_order_.push_back(i);
    for (ServiceId callee : services_[i].downstream) {
      const std::size_t j = index_of(callee);
      if (--indegree[j] == 0) frontier.insert(j);
    }
  }
  if (topo_order_.size() != services_.size()) {
    throw ConfigError("call graph contains a cycle");
  }

  if (entry) {
    if (!has_service(*entry)) {
      throw ConfigError("entry service " + std::to_string(*entry) + " does not exist");
    }
    entry_ = *entry;
  } else {
    entry_ = services_[topo_order_.front()].id;
  }
}

const ServiceSpec& Topology::service(ServiceId id) const { return services_[index_of(id)]; }

bool Topology::has_service(ServiceId id) const {
  auto it = std::lower_bound(services_.begin(), services_.end(), id,
                             [](const ServiceSpec& s, ServiceId v) { return s.id < v; });
  return it != services_.end() && it->id == id;
}

std::size_t Topology::index_of(ServiceId id) const {
  auto it = std::lower_bound(services_.begin(), services_.end(), id,
                             [](const ServiceSpec& s, ServiceId v) { return s.id < v; });
  if (it == services_.end() || it->id != id) {
    throw ConfigError("unknown service " + std::to_string(id));
  }
  return static_cast<std::size_t>(it - services_.begin());
}

std::size_t Topology::machine_index(MachineId id) const {
  auto it = std::lower_bound(machines_.begin(), machines_.end(), id,
                             [](const Machine& m, MachineId v) { return m.id < v; });
  if (it == machines_.end() || it->id != id) {
    throw ConfigError("unknown machine " + std::to_string(id));
  }
  return static_cast<std::size_t>(it - machines_.begin());
}

const std::vector<ServiceId>& Topology::upstream(ServiceId id) const {
  return upstream_[index_of(id)];
}

// --- Scenario documents ----------------------------------------------------

namespace {

Cuts read_cuts(const json& j, Cuts fallback) {
  if (j.is_null()) return fallback;
  if (!j.is_array() || j.size() != 2) throw ConfigError("bin cuts must be a two-element array");
  return Cuts{j.at(0).get<double>(), j.at(1).get<double>()};
}

WorkloadTrace read_workload(const json& j, const std::filesystem::path& base_dir) {
  WorkloadTrace trace;
  auto read_points = [&trace](const json& arr) {
    for (const auto& p : arr) {
      if (p.is_array() && p.size() == 2) {
        trace.points.emplace_back(p.at(0).get<Tick>(), p.at(1).get<double>());
      } else if (p.is_object()) {
        trace.points.emplace_back(p.at("tick").get<Tick>(), p.at("rps").get<double>());
      } else {
        throw ConfigError("workload points must be [tick, rps] pairs");
      }
    }
  };
  if (j.is_null()) {
    trace.points.emplace_back(0, 0.0);
  } else if (j.is_array()) {
    read_points(j);
  } else if (j.is_object()) {
    if (j.contains("csv")) {
      std::filesystem::path p = j.at("csv").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      std::ifstream in(p);
      if (!in) throw IoError("cannot open workload csv " + p.string());
      return WorkloadTrace::from_csv(in);
    }
    if (j.contains("points")) {
      read_points(j.at("points"));
    } else if (j.contains("constant")) {
      trace.points.emplace_back(0, j.at("constant").get<double>());
    } else {
      throw ConfigError("workload object needs 'csv', 'points' or 'constant'");
    }
  } else {
    throw ConfigError("workload must be a list or an object");
  }
  if (trace.points.empty()) throw ConfigError("workload trace is empty");
  trace.validate();
  return trace;
}

Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir) {
  Scenario s;
  s.name = doc.value("name", std::string("scenario"));
  s.seed = doc.value("seed", std::uint64_t{0});

  s.params.dt_s = doc.value("dt", 1.0);
  s.params.latency_cap_ms = doc.value("latency_cap_ms", 10000.0);
  s.params.net_delay_unit_ms = doc.value("net_delay_unit_ms", 100.0);
  const std::string fan_out = doc.value("fan_out", std::string("sequential"));
  if (fan_out == "sequential") {
    s.params.fan_out = FanOut::Sequential;
  } else if (fan_out == "parallel") {
    s.params.fan_out = FanOut::Parallel;
  } else {
    throw ConfigError("fan_out must be 'sequential' or 'parallel'");
  }
  if (!(s.params.dt_s > 0.0)) throw ConfigError("dt must be positive");
  if (!(s.params.latency_cap_ms > 0.0)) throw ConfigError("latency_cap_ms must be positive");

  s.thresholds.slo_ms = doc.value("slo_ms", 500.0);
  s.thresholds.at_risk_ratio = doc.value("at_risk_ratio", 0.8);
  if (doc.contains("bin_cuts")) {
    const auto& bc = doc.at("bin_cuts");
    s.thresholds.cpu = read_cuts(bc.value("cpu", json()), s.thresholds.cpu);
    s.thresholds.mem = read_cuts(bc.value("mem", json()), s.thresholds.mem);
    s.thresholds.latency = read_cuts(bc.value("latency", json()), s.thresholds.latency);
    s.thresholds.rps = read_cuts(bc.value("rps", json()), s.thresholds.rps);
  }

  std::vector<Machine> machines;
  for (const auto& m : doc.at("machines")) {
    machines.push_back(Machine{m.at("id").get<MachineId>(), m.at("cpu_capacity").get<std::int64_t>(),
                               m.at("mem_capacity").get<std::int64_t>()});
  }

  std::vector<ServiceSpec> services;
  for (const auto& js : doc.at("services")) {
    ServiceSpec spec;
    spec.id = js.at("id").get<ServiceId>();
    spec.name = js.value("name", "svc-" + std::to_string(spec.id));
    const std::string profile = js.value("profile", std::string("CPU"));
    const auto r = parse_resource(profile);
    if (!r) throw ConfigError("service " + std::to_string(spec.id) + ": unknown profile " + profile);
    spec.profile = *r;
    spec.base_service_rate = js.value("base_service_rate", 100.0);
    spec.cpu_request = js.value("cpu_request", std::int64_t{500});
    spec.mem_request = js.value("mem_request", std::int64_t{256});
    spec.readiness_time = js.value("readiness_time", 0.0);
    spec.downstream = js.value("downstream", std::vector<ServiceId>{});
    spec.base_mem_utilization = js.value("base_mem_utilization", 0.3);
    spec.description = js.value("description", std::string());
    if (js.contains("slo_ms")) s.thresholds.service_slo_ms[spec.id] = js.at("slo_ms").get<double>();
    services.push_back(std::move(spec));
  }

  std::optional<ServiceId> entry;
  if (doc.contains("entry")) entry = doc.at("entry").get<ServiceId>();
  s.topology = Topology(std::move(machines), std::move(services), entry);
  s.thresholds.validate();

  s.workload = read_workload(doc.value("workload", json()), base_dir);

  for (const auto& jf : doc.value("faults", json::array())) {
    FaultInjection f;
    f.service_id = jf.at("service_id").get<ServiceId>();
    const std::string type = jf.at("type").get<std::string>();
    const auto t = parse_fault_type(type);
    if (!t) throw ConfigError("unknown fault type " + type);
    f.type = *t;
    f.magnitude = jf.value("magnitude", 0.5);
    f.start_tick = jf.value("start_tick", Tick{0});
    f.end_tick = jf.at("end_tick").get<Tick>();
    if (!s.topology.has_service(f.service_id)) {
      throw ConfigError("fault references unknown service " + std::to_string(f.service_id));
    }
    if (!(f.magnitude > 0.0 && f.magnitude <= 1.0)) {
      throw ConfigError("fault magnitude must be in (0, 1]");
    }
    if (!(f.start_tick < f.end_tick)) throw ConfigError("fault start_tick must precede end_tick");
    s.faults.push_back(f);
  }
  return s;
}

json cuts_json(const Cuts& c) { return json::array({c.lower, c.upper}); }

}  // namespace

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  Scenario s;
  try {
    const json doc = json::parse(text);
    s = scenario_from_json(doc, base_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  // Placing the tick-0 replicas surfaces capacity overflow.
  Simulator(s).initial_state();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

std::string scenario_to_json(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["seed"] = s.seed;
  doc["dt"] = s.params.dt_s;
  doc["latency_cap_ms"] = s.params.latency_cap_ms;
  doc["net_delay_unit_ms"] = s.params.net_delay_unit_ms;
  doc["fan_out"] = s.params.fan_out == FanOut::Sequential ? "sequential" : "parallel";
  doc["slo_ms"] = s.thresholds.slo_ms;
  doc["at_risk_ratio"] = s.thresholds.at_risk_ratio;
  doc["bin_cuts"] = {{"cpu", cuts_json(s.thresholds.cpu)},
                     {"mem", cuts_json(s.thresholds.mem)},
                     {"latency", cuts_json(s.thresholds.latency)},
                     {"rps", cuts_json(s.thresholds.rps)}};
  doc["entry"] = s.topology.entry();
  doc["machines"] = json::array();
  for (const auto& m : s.topology.machines()) {
    doc["machines"].push_back(
        {{"id", m.id}, {"cpu_capacity", m.cpu_capacity}, {"mem_capacity", m.mem_capacity}});
  }
  doc["services"] = json::array();
  for (const auto& spec : s.topology.services()) {
    json js = {{"id", spec.id},
               {"name", spec.name},
               {"profile", std::string(to_string(spec.profile))},
               {"base_service_rate", spec.base_service_rate},
               {"cpu_request", spec.cpu_request},
               {"mem_request", spec.mem_request},
               {"readiness_time", spec.readiness_time},
               {"downstream", spec.downstream},
               {"base_mem_utilization", spec.base_mem_utilization}};
    if (!spec.description.empty()) js["description"] = spec.description;
    auto slo = s.thresholds.service_slo_ms.find(spec.id);
    if (slo != s.thresholds.service_slo_ms.end()) js["slo_ms"] = slo->second;
    doc["services"].push_back(std::move(js));
  }
  doc["workload"] = json::array();
  for (const auto& [tick, rps] : s.workload.points) doc["workload"].push_back({tick, rps});
  doc["faults"] = json::array();
  for (const auto& f : s.faults) {
    doc["faults"].push_back({{"service_id", f.service_id},
                             {"type", std::string(to_string(f.type))},
                             {"magnitude", f.magnitude},
                             {"start_tick", f.start_tick},
                             {"end_tick", f.end_tick}});
  }
  return doc.dump(2);
}

}  // namespace cotctl::sim
