#include "cotctl/encoder.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace cotctl::encoder {

std::string_view to_string(Level l) {
  switch (l) {
    case Level::Low: return "LOW";
    case Level::Medium: return "MEDIUM";
    case Level::High: return "HIGH";
  }
  return "?";
}

std::optional<Level> parse_level(std::string_view s) {
  if (s == "LOW") return Level::Low;
  if (s == "MEDIUM") return Level::Medium;
  if (s == "HIGH") return Level::High;
  return std::nullopt;
}

std::string_view to_string(SloStatus s) {
  switch (s) {
    case SloStatus::Ok: return "OK";
    case SloStatus::AtRisk: return "AT_RISK";
    case SloStatus::Violated: return "VIOLATED";
  }
  return "?";
}

Level bin(double value, const Cuts& cuts) {
  if (value < cuts.lower) return Level::Low;
  if (value < cuts.upper) return Level::Medium;
  return Level::High;
}

const ServiceObservation* DiscretizedState::find(ServiceId id) const {
  for (const auto& s : services) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

int DiscretizedState::slo_violations() const {
  return static_cast<int>(std::count_if(services.begin(), services.end(), [](const auto& s) {
    return s.slo == SloStatus::Violated;
  }));
}

std::vector<int> DiscretizedState::features() const {
  std::vector<int> f;
  f.reserve(1 + 3 * services.size());
  f.push_back(static_cast<int>(arrival));
  for (const auto& s : services) {
    f.push_back(static_cast<int>(s.cpu));
    f.push_back(static_cast<int>(s.mem));
    f.push_back(static_cast<int>(s.latency));
  }
  return f;
}

DiscretizedState discretize(const sim::ClusterState& state, const sim::Topology& topology,
                            const ThresholdTable& thresholds) {
  DiscretizedState out;
  out.tick = state.tick;
  out.arrival = bin(state.arrival_rate, thresholds.rps);
  for (const auto& spec : topology.services()) {
    const auto& svc = state.service(spec.id);
    const double slo = thresholds.slo_for(spec.id);
    const double ratio = svc.latency_ms / slo;
    ServiceObservation obs;
    obs.id = spec.id;
    obs.cpu = bin(svc.cpu_utilization, thresholds.cpu);
    obs.mem = bin(svc.mem_utilization, thresholds.mem);
    obs.latency = bin(ratio, thresholds.latency);
    obs.replicas = svc.replica_count();
    obs.ready = svc.ready_count();
    if (svc.latency_ms > slo) {
      obs.slo = SloStatus::Violated;
    } else if (ratio > thresholds.at_risk_ratio) {
      obs.slo = SloStatus::AtRisk;
    } else {
      obs.slo = SloStatus::Ok;
    }
    out.services.push_back(obs);
  }
  return out;
}

std::string encode_call_graph(const sim::Topology& topology) {
  std::string out;
  for (const auto& spec : topology.services()) {
    out += "#" + std::to_string(spec.id) + " @" + profile_letter(spec.profile) + " ->";
    std::vector<ServiceId> callees = spec.downstream;
    std::sort(callees.begin(), callees.end());
    for (ServiceId c : callees) out += " #" + std::to_string(c);
    out += '\n';
    const auto& callers = topology.upstream(spec.id);
    if (!callers.empty()) {
      out += "#" + std::to_string(spec.id) + " @" + profile_letter(spec.profile, true) + " <-";
      for (ServiceId c : callers) out += " #" + std::to_string(c);
      out += '\n';
    }
  }
  if (!out.empty()) out.pop_back();
  return out;
}

std::string describe_deployments(const sim::Topology& topology, const sim::ClusterState& state) {
  std::ostringstream os;
  bool first = true;
  for (const auto& spec : topology.services()) {
    const auto& svc = state.service(spec.id);
    if (!first) os << '\n';
    first = false;
    char readiness[32];
    std::snprintf(readiness, sizeof readiness, "%.0f", spec.readiness_time);
    os << '#' << spec.id << ' ' << spec.name << " profile @" << profile_letter(spec.profile)
       << " readiness " << readiness << "s replicas " << svc.replica_count() << " cpu "
       << svc.cpu_alloc << "m mem " << svc.mem_alloc << "Mi";
    if (!spec.description.empty()) os << " : " << spec.description;
  }
  return os.str();
}

Outcome classify_outcome(const DiscretizedState& before, const DiscretizedState& after) {
  const int b = before.slo_violations();
  const int a = after.slo_violations();
  if (a < b) return Outcome::Improved;
  if (a > b) return Outcome::Degraded;
  return Outcome::Neutral;
}

EwmaPredictor::EwmaPredictor(double decay) : decay_(decay) {
  if (!(decay >= 0.0 && decay <= 1.0)) throw std::invalid_argument("EWMA decay must be in [0, 1]");
}

WorkloadForecast EwmaPredictor::predict(std::span<const double> recent, int /*horizon*/) const {
  if (recent.empty()) throw std::invalid_argument("workload history must not be empty");
  double level = recent.front();
  for (std::size_t i = 1; i < recent.size(); ++i) {
    level = decay_ * level + (1.0 - decay_) * recent[i];
  }
  return WorkloadForecast{std::max(0.0, level), std::nullopt};
}

WorkloadForecast predict_workload(std::span<const double> recent, int horizon) {
  return EwmaPredictor(0.5).predict(recent, horizon);
}

}  // namespace cotctl::encoder
