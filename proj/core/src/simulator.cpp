#include "cotctl/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "cotctl/error.hpp"
#include "cotctl/queueing.hpp"
#include "cotctl/rng.hpp"

namespace cotctl::sim {

int ServiceState::ready_count() const {
  return static_cast<int>(std::count_if(replicas.begin(), replicas.end(),
                                        [](const Replica& r) { return r.ready(); }));
}

std::int64_t ServiceState::reserved_cpu() const {
  return pending_cpu_alloc ? std::max(cpu_alloc, *pending_cpu_alloc) : cpu_alloc;
}

std::int64_t ServiceState::reserved_mem() const {
  return pending_mem_alloc ? std::max(mem_alloc, *pending_mem_alloc) : mem_alloc;
}

const ServiceState& ClusterState::service(ServiceId id) const {
  for (const auto& s : services) {
    if (s.id == id) return s;
  }
  throw std::out_of_range("unknown service " + std::to_string(id));
}

ServiceState& ClusterState::service(ServiceId id) {
  return const_cast<ServiceState&>(std::as_const(*this).service(id));
}

std::string_view to_string(Infeasibility i) {
  switch (i) {
    case Infeasibility::UnknownService: return "UnknownService";
    case Infeasibility::BelowMinReplicas: return "BelowMinReplicas";
    case Infeasibility::MachineCapacity: return "MachineCapacity";
    case Infeasibility::InvalidAllocation: return "InvalidAllocation";
  }
  return "?";
}

namespace {

// Machine with the most residual CPU that fits the request; lowest id on ties.
std::optional<std::size_t> place(const ClusterState& state, std::int64_t cpu, std::int64_t mem) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < state.machines.size(); ++i) {
    const auto& m = state.machines[i];
    if (m.cpu_residual < cpu || m.mem_residual < mem) continue;
    if (!best || m.cpu_residual > state.machines[*best].cpu_residual) best = i;
  }
  return best;
}

std::size_t machine_slot(const ClusterState& state, MachineId id) {
  for (std::size_t i = 0; i < state.machines.size(); ++i) {
    if (state.machines[i].id == id) return i;
  }
  throw std::logic_error("replica on unknown machine " + std::to_string(id));
}

// Whether every machine hosting `svc` can absorb the per-replica change to
// max(current, requested) for the given resource.
bool fits_resize(const ClusterState& state, const ServiceState& svc, bool cpu,
                 std::int64_t requested) {
  const std::int64_t reserved = cpu ? svc.reserved_cpu() : svc.reserved_mem();
  const std::int64_t current = cpu ? svc.cpu_alloc : svc.mem_alloc;
  const std::int64_t needed = std::max(current, requested);
  if (needed <= reserved) return true;
  std::vector<std::int64_t> extra(state.machines.size(), 0);
  for (const auto& r : svc.replicas) extra[machine_slot(state, r.machine)] += needed - reserved;
  for (std::size_t i = 0; i < extra.size(); ++i) {
    const auto residual = cpu ? state.machines[i].cpu_residual : state.machines[i].mem_residual;
    if (extra[i] > residual) return false;
  }
  return true;
}

std::optional<Infeasibility> try_apply(const Simulator& sim, ClusterState& state,
                                       const ScalingAction& action, double dt,
                                       const std::function<void(ClusterState&)>& refresh) {
  if (action.no_op) return std::nullopt;
  if (!sim.topology().has_service(action.service_id)) return Infeasibility::UnknownService;
  if (action.delta == 0) return Infeasibility::InvalidAllocation;
  auto& svc = state.service(action.service_id);

  switch (action.kind) {
    case ActionKind::Horizontal: {
      if (action.delta > 0) {
        const int warmup = sim.readiness_ticks(svc.id, dt);
        for (int k = 0; k < action.delta; ++k) {
          const auto slot = place(state, svc.reserved_cpu(), svc.reserved_mem());
          if (!slot) return Infeasibility::MachineCapacity;
          svc.replicas.push_back(Replica{state.machines[*slot].id, warmup});
          refresh(state);
        }
      } else {
        if (svc.replica_count() + action.delta < 1) return Infeasibility::BelowMinReplicas;
        for (int k = 0; k < -action.delta; ++k) {
          // Retire the replica furthest from ready, newest on ties.
          std::size_t victim = svc.replicas.size() - 1;
          for (std::size_t i = svc.replicas.size(); i-- > 0;) {
            if (svc.replicas[i].warmup_ticks > svc.replicas[victim].warmup_ticks) victim = i;
          }
          svc.replicas.erase(svc.replicas.begin() + static_cast<std::ptrdiff_t>(victim));
        }
        refresh(state);
      }
      return std::nullopt;
    }
    case ActionKind::VerticalCpu:
    case ActionKind::VerticalMem: {
      const bool cpu = action.kind == ActionKind::VerticalCpu;
      const auto& pending = cpu ? svc.pending_cpu_alloc : svc.pending_mem_alloc;
      const std::int64_t base = pending ? *pending : (cpu ? svc.cpu_alloc : svc.mem_alloc);
      const std::int64_t requested = base + action.delta;
      if (requested <= 0) return Infeasibility::InvalidAllocation;
      if (!fits_resize(state, svc, cpu, requested)) return Infeasibility::MachineCapacity;
      auto& slot = cpu ? svc.pending_cpu_alloc : svc.pending_mem_alloc;
      const std::int64_t current = cpu ? svc.cpu_alloc : svc.mem_alloc;
      slot = requested == current ? std::nullopt : std::optional<std::int64_t>(requested);
      refresh(state);
      return std::nullopt;
    }
  }
  return Infeasibility::InvalidAllocation;
}

}  // namespace

Simulator::Simulator(Scenario scenario) : scenario_(std::move(scenario)) {}

int Simulator::readiness_ticks(ServiceId id, double dt) const {
  const double readiness = topology().service(id).readiness_time;
  if (readiness <= 0.0) return 0;
  return static_cast<int>(std::ceil(readiness / dt - 1e-12));
}

void Simulator::refresh_residuals(ClusterState& state) const {
  for (std::size_t i = 0; i < state.machines.size(); ++i) {
    const auto& m = topology().machines()[i];
    state.machines[i] = MachineState{m.id, m.cpu_capacity, m.mem_capacity};
  }
  for (const auto& svc : state.services) {
    for (const auto& r : svc.replicas) {
      auto& m = state.machines[machine_slot(state, r.machine)];
      m.cpu_residual -= svc.reserved_cpu();
      m.mem_residual -= svc.reserved_mem();
    }
  }
}

ClusterState Simulator::initial_state() const {
  ClusterState state;
  state.tick = 0;
  for (const auto& m : topology().machines()) {
    state.machines.push_back(MachineState{m.id, m.cpu_capacity, m.mem_capacity});
  }
  for (const auto& spec : topology().services()) {
    ServiceState svc;
    svc.id = spec.id;
    svc.cpu_alloc = spec.cpu_request;
    svc.mem_alloc = spec.mem_request;
    const auto slot = place(state, spec.cpu_request, spec.mem_request);
    if (!slot) {
      throw ConfigError("capacity overflow at t=0: cannot place service " + std::to_string(spec.id));
    }
    svc.replicas.push_back(Replica{state.machines[*slot].id, 0});
    state.machines[*slot].cpu_residual -= spec.cpu_request;
    state.machines[*slot].mem_residual -= spec.mem_request;
    state.services.push_back(std::move(svc));
  }
  for (const auto& f : scenario_.faults) {
    if (f.active_at(state.tick)) state.active_faults.push_back(f);
  }
  recompute(state);
  return state;
}

std::optional<Infeasibility> Simulator::check_feasible(const ClusterState& state,
                                                       const ScalingAction& action) const {
  ClusterState trial = state;
  return try_apply(*this, trial, action, scenario_.params.dt_s,
                   [this](ClusterState& s) { refresh_residuals(s); });
}

void Simulator::apply_action(ClusterState& state, const ScalingAction& action, double dt) const {
  const auto failure =
      try_apply(*this, state, action, dt, [this](ClusterState& s) { refresh_residuals(s); });
  if (failure) {
    throw std::logic_error("unverified action " + describe(action) + " is infeasible: " +
                           std::string(to_string(*failure)));
  }
}

ClusterState Simulator::begin_tick(const ClusterState& state) const {
  ClusterState next = state;
  next.tick = state.tick + 1;

  for (auto& svc : next.services) {
    for (auto& r : svc.replicas) {
      if (r.warmup_ticks > 0) --r.warmup_ticks;
    }
    if (svc.pending_cpu_alloc) {
      svc.cpu_alloc = *svc.pending_cpu_alloc;
      svc.pending_cpu_alloc.reset();
    }
    if (svc.pending_mem_alloc) {
      svc.mem_alloc = *svc.pending_mem_alloc;
      svc.pending_mem_alloc.reset();
    }
  }
  refresh_residuals(next);
  return next;
}

ClusterState Simulator::step(const ClusterState& state,
                             std::span<const ScalingAction> actions) const {
  return step(state, actions, scenario_.params.dt_s);
}

ClusterState Simulator::step(const ClusterState& state, std::span<const ScalingAction> actions,
                             double dt) const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  ClusterState next = begin_tick(state);

  for (const auto& action : actions) apply_action(next, action, dt);

  next.active_faults.clear();
  for (const auto& f : scenario_.faults) {
    if (f.active_at(next.tick)) next.active_faults.push_back(f);
  }

  // Leaks grow while injected and are released when the injector stops.
  for (auto& svc : next.services) {
    const auto& spec = topology().service(svc.id);
    double growth = 0.0;
    for (const auto& f : next.active_faults) {
      if (f.service_id == svc.id && f.type == FaultType::MemLeak) growth += f.magnitude;
    }
    if (growth == 0.0) {
      svc.leak_level = 0.0;
      continue;
    }
    const double scale = static_cast<double>(spec.mem_request) / static_cast<double>(svc.mem_alloc);
    svc.leak_level += growth * scale;
    if (spec.base_mem_utilization * scale + svc.leak_level >= 1.0) {
      const int warmup = readiness_ticks(svc.id, dt);
      for (auto& r : svc.replicas) r.warmup_ticks = warmup;
      svc.leak_level = 0.0;
      ++svc.restarts;
    }
  }

  recompute(next);
  return next;
}

void Simulator::recompute(ClusterState& state) const {
  const auto& topo = topology();
  const auto& params = scenario_.params;
  const double cap = params.latency_cap_ms;
  const std::size_t n = topo.services().size();

  state.arrival_rate = scenario_.workload.rate_at(state.tick);

  std::vector<double> lambda(n, 0.0);
  lambda[topo.index_of(topo.entry())] = state.arrival_rate;
  for (std::size_t idx : topo.topological_order()) {
    for (ServiceId callee : topo.services()[idx].downstream) {
      lambda[topo.index_of(callee)] += lambda[idx];
    }
  }

  double served_fraction = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& spec = topo.services()[i];
    auto& svc = state.services[i];

    double hog = 1.0;
    double net_delay = 0.0;
    for (const auto& f : state.active_faults) {
      if (f.service_id != svc.id) continue;
      if (f.type == FaultType::CpuHog) hog *= 1.0 - f.magnitude;
      if (f.type == FaultType::NetDelay) net_delay += f.magnitude * params.net_delay_unit_ms;
    }
    const double mu = spec.base_service_rate *
                      (static_cast<double>(svc.cpu_alloc) / static_cast<double>(spec.cpu_request)) *
                      hog;
    const int ready = svc.ready_count();
    const auto q = queueing::mmc(lambda[i], mu, ready);

    svc.arrival_rps = lambda[i];
    svc.service_rate = mu;
    svc.served_rps = std::min(lambda[i], ready * mu);
    svc.saturated = q.saturated;
    svc.cpu_utilization =
        q.saturated ? (lambda[i] > 0.0 ? 1.0 : 0.0) : std::clamp(q.utilization, 0.0, 1.0);
    const double mem_scale =
        static_cast<double>(spec.mem_request) / static_cast<double>(svc.mem_alloc);
    svc.mem_utilization =
        std::clamp(spec.base_mem_utilization * mem_scale + svc.leak_level, 0.0, 1.0);
    svc.wait_probability = q.wait_probability;
    svc.service_time_ms = mu > 0.0 ? 1000.0 / mu : cap;
    svc.sojourn_ms = q.saturated ? cap : std::min(cap, 1000.0 * q.mean_sojourn_s);
    svc.net_delay_ms = net_delay;

    if (lambda[i] > 0.0) {
      const double capacity = ready * mu;
      served_fraction = std::min(served_fraction, capacity / lambda[i]);
    }
  }

  // Subtree response times, callees before callers.
  std::vector<bool> subtree_saturated(n, false);
  const auto& order = topo.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t i = *it;
    auto& svc = state.services[i];
    bool saturated = svc.saturated;
    double calls = 0.0;
    for (ServiceId callee : topo.services()[i].downstream) {
      const std::size_t j = topo.index_of(callee);
      saturated = saturated || subtree_saturated[j];
      const double leg = state.services[j].latency_ms + svc.net_delay_ms;
      calls = params.fan_out == FanOut::Sequential ? calls + leg : std::max(calls, leg);
    }
    subtree_saturated[i] = saturated;
    svc.latency_ms = saturated ? cap : std::min(cap, svc.sojourn_ms + calls);
  }

  const auto entry = topo.index_of(topo.entry());
  state.latency_ms = state.services[entry].latency_ms;
  state.throughput_rps = state.arrival_rate * std::clamp(served_fraction, 0.0, 1.0);
  refresh_residuals(state);
}

std::vector<double> Simulator::sample_latency_distribution(const ClusterState& state,
                                                           std::size_t n,
                                                           std::uint64_t seed) const {
  if (n == 0) throw std::invalid_argument("sample count must be >= 1");
  const auto& topo = topology();
  const auto& params = scenario_.params;
  const double cap = params.latency_cap_ms;
  const std::size_t entry = topo.index_of(topo.entry());

  std::vector<double> samples;
  samples.reserve(n);
  Rng rng(seed);
  std::function<double(std::size_t)> request = [&](std::size_t i) -> double {
    const auto& svc = state.services[i];
    if (svc.saturated) return std::numeric_limits<double>::infinity();
    double t = svc.service_time_ms;
    if (rng.uniform() < svc.wait_probability) {
      const double drain = state.services[i].ready_count() * svc.service_rate - svc.arrival_rps;
      t += rng.exponential(1000.0 / drain);
    }
    double calls = 0.0;
    for (ServiceId callee : topo.services()[i].downstream) {
      const double leg = request(topo.index_of(callee)) + svc.net_delay_ms;
      calls = params.fan_out == FanOut::Sequential ? calls + leg : std::max(calls, leg);
    }
    return t + calls;
  };
  for (std::size_t k = 0; k < n; ++k) samples.push_back(std::min(cap, request(entry)));
  return samples;
}

LabelSet ground_truth_labels(const ClusterState& state) {
  LabelSet labels;
  for (const auto& f : state.active_faults) {
    labels.insert(RootLabel{f.service_id, root_cause_resource(f.type)});
  }
  return labels;
}

namespace {

struct Fnv {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 1099511628211ULL;
    }
  }
  void num(double v) { bytes(std::bit_cast<std::uint64_t>(v)); }
  void num(std::int64_t v) { bytes(static_cast<std::uint64_t>(v)); }
};

}  // namespace

std::uint64_t digest(const ClusterState& state) {
  Fnv f;
  f.num(static_cast<std::int64_t>(state.tick));
  f.num(state.arrival_rate);
  f.num(state.throughput_rps);
  f.num(state.latency_ms);
  for (const auto& s : state.services) {
    f.num(static_cast<std::int64_t>(s.id));
    for (const auto& r : s.replicas) {
      f.num(static_cast<std::int64_t>(r.machine));
      f.num(static_cast<std::int64_t>(r.warmup_ticks));
    }
    f.num(s.cpu_alloc);
    f.num(s.mem_alloc);
    f.num(s.pending_cpu_alloc.value_or(-1));
    f.num(s.pending_mem_alloc.value_or(-1));
    f.num(s.leak_level);
    f.num(s.cpu_utilization);
    f.num(s.mem_utilization);
    f.num(s.latency_ms);
  }
  for (const auto& fi : state.active_faults) {
    f.num(static_cast<std::int64_t>(fi.service_id));
    f.num(static_cast<std::int64_t>(fi.type));
    f.num(fi.magnitude);
  }
  return f.h;
}

}  // namespace cotctl::sim
