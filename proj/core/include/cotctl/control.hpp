#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cotctl/carrier.hpp"
#include "cotctl/cot.hpp"
#include "cotctl/policy.hpp"
#include "cotctl/prompt.hpp"
#include "cotctl/reward.hpp"
#include "cotctl/simulator.hpp"
#include "cotctl/training.hpp"

namespace cotctl::control {

struct VerifierRules {
  int min_replicas = 1;
  int max_replicas = 10;
  std::int64_t max_total_millicores = 64000;  // reserved across all replicas
  int max_replica_step = 3;
  std::int64_t max_cpu_step = 1000;  // millicores
  std::int64_t max_mem_step = 1024;  // MiB

  void validate() const;
};

struct ControlConfig {
  encoder::Task task = encoder::Task::Allocation;
  double interval_s = 10.0;  // simulated time between scheduling iterations
  Tick horizon = 500;        // ticks driven by the allocation loop
  bool offline_training = false;
  bool online_training = false;
  VerifierRules rules;
  int candidates = 1;  // samples drawn per iteration
  int agents = 1;      // independent proposers merged by resolve_conflicts
  int carrier_k = 4;
  Tick gathering_ticks = 200;
  double perturb_probability = 0.2;
  int carrier_refresh_intervals = 0;  // 0 never refreshes the carrier
  Tick rca_observe_tick = 0;
  int forecast_window = 5;
  double online_learning_rate = 0.1;
  int latency_samples = 200;  // request latencies sampled per iteration
  reward::RewardConfig reward;
  training::TrainingConfig training;
  std::uint64_t seed = 1;

  void validate() const;
  /// interval_s in whole ticks of `dt`, at least 1.
  int interval_ticks(double dt) const;
};

enum class RejectReason {
  MinReplicas,
  MaxReplicas,
  MachineCapacity,
  TotalBudget,
  StepSize,
  Duplicate,
  UnknownService,
  Invalid,
};

std::string_view to_string(RejectReason r);

struct Rejection {
  ScalingAction action;
  RejectReason reason = RejectReason::Invalid;
};

struct Verdict {
  std::vector<ScalingAction> accepted;
  std::vector<Rejection> rejected;
};

/// Checks actions in order against the rules, each one against the start of
/// the next tick (Simulator::begin_tick) as already modified by the accepted
/// ones before it. No-op actions are dropped.
Verdict verify_actions(std::span<const ScalingAction> actions, const sim::ClusterState& state,
                       const sim::Simulator& simulator, const VerifierRules& rules);

/// Reserved millicores across all replicas, counting pending resizes.
std::int64_t total_millicores(const sim::ClusterState& state);

/// Merges per-agent proposals keeping, per (service, kind), the action that
/// provisions the most (largest signed delta; first proposal on ties).
std::vector<ScalingAction> resolve_conflicts(std::span<const std::vector<ScalingAction>> proposals);

struct ServiceSummary {
  ServiceId id = 0;
  int replicas = 0;
  std::int64_t cpu_alloc = 0;
  std::int64_t mem_alloc = 0;
  std::int64_t reserved_cpu = 0;
};

struct TickMetrics {
  Tick tick = 0;
  double arrival_rps = 0.0;
  double throughput_rps = 0.0;
  double latency_ms = 0.0;
  bool slo_violated = false;  // entry latency above the entry SLO
};

struct EpisodeRecord {
  Tick tick = 0;
  encoder::Task task = encoder::Task::Allocation;
  std::string prompt;
  std::string output;
  int format_failures = 0;
  std::vector<cot::CounterfactualClaim> claims;
  std::vector<ScalingAction> executed;
  std::vector<Rejection> rejected;
  std::vector<ServiceSummary> before;  // start of the tick the actions landed on
  std::uint64_t pre_digest = 0;
  std::uint64_t post_digest = 0;
  std::optional<reward::RewardBreakdown> reward;
  std::optional<Outcome> outcome;
  bool online_update = false;
  std::string error;
};

void write_episode_jsonl(std::ostream& out, const EpisodeRecord& record);

/// Post-hoc safety audit: every executed action against the rules, using the
/// pre-state summary stored in its record. Returns one message per violation.
std::vector<std::string> audit(std::span<const EpisodeRecord> records, const VerifierRules& rules);

struct GatheringResult {
  encoder::Carrier carrier;
  std::vector<encoder::HistoryEntry> history;
};

/// Runs the threshold baseline with random +/-1 replica perturbations for
/// `config.gathering_ticks` ticks and clusters the recorded triples.
GatheringResult state_gathering_phase(const sim::Simulator& simulator, const ControlConfig& config);

/// Shared per-run context of the allocation loop.
struct LoopContext {
  const sim::Simulator* simulator = nullptr;
  const encoder::Carrier* carrier = nullptr;
  std::vector<double> recent_arrivals;
  std::vector<TickMetrics> ticks;
  std::vector<double> latency_samples;
  int iteration = 0;
};

struct IterationResult {
  std::vector<ScalingAction> actions;
  EpisodeRecord record;
  sim::ClusterState next;
};

/// Prompt with carrier, generate, parse, interpret, verify, execute for one
/// interval, classify the outcome and optionally take an online step.
IterationResult scheduling_iteration(const sim::ClusterState& state, LoopContext& ctx,
                                     policy::PolicyBackend& policy, const ControlConfig& config);

struct RcaResult {
  std::vector<RootLabel> ranked;
  LabelSet predicted;
  LabelSet truth;
  cot::CotOutput output;
  int executed_actions = 0;
};

struct SystemOutput {
  std::optional<RcaResult> rca;
  std::vector<EpisodeRecord> episodes;
  std::vector<TickMetrics> ticks;
  std::vector<double> latency_samples;
  std::optional<encoder::Carrier> carrier;
  int iterations = 0;
  bool trained_offline = false;
};

/// Builds the prompt for `state` (carrier required for allocation).
encoder::Prompt build_prompt(const sim::Simulator& simulator, const sim::ClusterState& state,
                             encoder::Task task, const encoder::Carrier* carrier,
                             std::span<const double> recent_arrivals, int forecast_window);

/// Optional offline training, then either the one-shot RCA path (no actions
/// executed) or floor(horizon / interval) allocation iterations.
SystemOutput run_system(const ControlConfig& config, const sim::Scenario& scenario,
                        policy::PolicyBackend& policy,
                        std::span<const training::AnnotatedSample> dataset = {});

}  // namespace cotctl::control
