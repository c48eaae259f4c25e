#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cotctl/thresholds.hpp"
#include "cotctl/types.hpp"

namespace cotctl::sim {

struct Machine {
  MachineId id = 0;
  std::int64_t cpu_capacity = 0;  // millicores
  std::int64_t mem_capacity = 0;  // MiB
};

struct ServiceSpec {
  ServiceId id = 0;
  std::string name;
  ResourceType profile = ResourceType::Cpu;
  double base_service_rate = 1.0;  // req/s per replica at cpu_request
  std::int64_t cpu_request = 500;
  std::int64_t mem_request = 256;
  double readiness_time = 0.0;     // seconds
  std::vector<ServiceId> downstream;
  double base_mem_utilization = 0.3;
  std::string description;
};

enum class FaultType { CpuHog, MemLeak, NetDelay };

std::string_view to_string(FaultType t);
std::optional<FaultType> parse_fault_type(std::string_view s);
ResourceType root_cause_resource(FaultType t);

struct FaultInjection {
  ServiceId service_id = 0;
  FaultType type = FaultType::CpuHog;
  double magnitude = 0.5;  // (0, 1]
  Tick start_tick = 0;
  Tick end_tick = 1;

  bool active_at(Tick t) const { return start_tick <= t && t < end_tick; }
  friend bool operator==(const FaultInjection&, const FaultInjection&) = default;
};

/// Piecewise-constant arrival-rate trace at the entry service.
struct WorkloadTrace {
  std::vector<std::pair<Tick, double>> points;

  /// Rate of the last point with tick <= t; the first point's rate before it.
  double rate_at(Tick t) const;
  void validate() const;

  /// Reads a `tick,rps` CSV (header required).
  static WorkloadTrace from_csv(std::istream& in);
  void to_csv(std::ostream& out) const;
};

enum class FanOut { Sequential, Parallel };

struct SimulationParams {
  double dt_s = 1.0;
  double latency_cap_ms = 10000.0;
  FanOut fan_out = FanOut::Sequential;
  double net_delay_unit_ms = 100.0;
};

class Topology {
 public:
  Topology() = default;
  Topology(std::vector<Machine> machines, std::vector<ServiceSpec> services,
           std::optional<ServiceId> entry = std::nullopt);

  const std::vector<Machine>& machines() const { return machines_; }
  const std::vector<ServiceSpec>& services() const { return services_; }
  const ServiceSpec& service(ServiceId id) const;
  bool has_service(ServiceId id) const;
  std::size_t index_of(ServiceId id) const;
  std::size_t machine_index(MachineId id) const;
  ServiceId entry() const { return entry_; }
  /// Callers of `id`, ascending.
  const std::vector<ServiceId>& upstream(ServiceId id) const;
  /// Service indices with every caller before its callees.
  const std::vector<std::size_t>& topological_order() const { return topo_order_; }

 private:
  std::vector<Machine> machines_;
  std::vector<ServiceSpec> services_;  // sorted by id
  std::vector<std::vector<ServiceId>> upstream_;
  std::vector<std::size_t> topo_order_;
  ServiceId entry_ = 0;
};

struct Scenario {
  std::string name;
  Topology topology;
  WorkloadTrace workload;
  std::vector<FaultInjection> faults;
  SimulationParams params;
  ThresholdTable thresholds;
  std::uint64_t seed = 0;
};

/// Parses a scenario document. `base_dir` resolves a relative workload CSV.
/// Throws ConfigError on a call-graph cycle (including self-calls), unknown
/// service references, invalid fields, or t=0 capacity overflow.
Scenario parse_scenario(std::string_view json, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const Scenario& s);

struct Replica {
  MachineId machine = 0;
  int warmup_ticks = 0;  // ticks until the replica serves traffic

  bool ready() const { return warmup_ticks == 0; }
  friend bool operator==(const Replica&, const Replica&) = default;
};

struct ServiceState {
  ServiceId id = 0;
  std::vector<Replica> replicas;
  std::int64_t cpu_alloc = 0;  // millicores per replica
  std::int64_t mem_alloc = 0;  // MiB per replica
  std::optional<std::int64_t> pending_cpu_alloc;
  std::optional<std::int64_t> pending_mem_alloc;
  double leak_level = 0.0;
  int restarts = 0;

  // Observations recomputed every tick.
  double arrival_rps = 0.0;
  double served_rps = 0.0;
  double service_rate = 0.0;  // effective per-replica mu
  double cpu_utilization = 0.0;
  double mem_utilization = 0.0;
  double wait_probability = 0.0;
  double service_time_ms = 0.0;
  double sojourn_ms = 0.0;     // own queue + service
  double latency_ms = 0.0;     // response time seen by callers (subtree)
  double net_delay_ms = 0.0;   // added to each outbound call
  bool saturated = false;

  int replica_count() const { return static_cast<int>(replicas.size()); }
  int ready_count() const;
  std::int64_t reserved_cpu() const;  // per replica, max(current, pending)
  std::int64_t reserved_mem() const;
};

struct MachineState {
  MachineId id = 0;
  std::int64_t cpu_residual = 0;
  std::int64_t mem_residual = 0;
};

struct ClusterState {
  Tick tick = 0;
  double arrival_rate = 0.0;
  double throughput_rps = 0.0;
  double latency_ms = 0.0;  // end-to-end mean at the entry
  std::vector<ServiceState> services;  // same order as Topology::services()
  std::vector<MachineState> machines;
  std::vector<FaultInjection> active_faults;

  const ServiceState& service(ServiceId id) const;
  ServiceState& service(ServiceId id);
};

enum class Infeasibility {
  UnknownService,
  BelowMinReplicas,
  MachineCapacity,
  InvalidAllocation,
};

std::string_view to_string(Infeasibility i);

class Simulator {
 public:
  explicit Simulator(Scenario scenario);

  const Scenario& scenario() const { return scenario_; }
  const Topology& topology() const { return scenario_.topology; }

  /// Tick-0 state: one ready replica per service at requested allocations.
  ClusterState initial_state() const;

  /// Advances one tick of `dt` seconds (scenario default when omitted).
  /// Actions must already be verified; infeasible ones throw std::logic_error.
  ClusterState step(const ClusterState& state, std::span<const ScalingAction> actions) const;
  ClusterState step(const ClusterState& state, std::span<const ScalingAction> actions,
                    double dt) const;

  /// Start of the next tick before any action: tick advanced, warm-ups
  /// counted down and pending resizes committed. Actions passed to step()
  /// are applied to this state.
  ClusterState begin_tick(const ClusterState& state) const;

  /// Why `action` cannot be applied to `state`, if it cannot.
  std::optional<Infeasibility> check_feasible(const ClusterState& state,
                                              const ScalingAction& action) const;

  /// Applies `action` in place without advancing time (no observation refresh).
  void apply_action(ClusterState& state, const ScalingAction& action, double dt) const;

  /// End-to-end latencies (ms) of `n` independent requests; deterministic in `seed`.
  std::vector<double> sample_latency_distribution(const ClusterState& state, std::size_t n,
                                                  std::uint64_t seed) const;

  int readiness_ticks(ServiceId id, double dt) const;

 private:
  void recompute(ClusterState& state) const;
  void refresh_residuals(ClusterState& state) const;

  Scenario scenario_;
};

/// Active faults mapped to (service, resource) root-cause labels.
LabelSet ground_truth_labels(const ClusterState& state);

/// FNV-1a digest over the state's structural fields and observations.
std::uint64_t digest(const ClusterState& state);

}  // namespace cotctl::sim
