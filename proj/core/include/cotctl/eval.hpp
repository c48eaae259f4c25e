#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cotctl/control.hpp"
#include "cotctl/policy.hpp"
#include "cotctl/simulator.hpp"
#include "cotctl/training.hpp"

namespace cotctl::eval {

/// `count` copies of `base`, each with one or two faults on distinct random
/// services, active from tick 0 on. Deterministic in `seed`.
std::vector<sim::Scenario> fault_scenarios(const sim::Scenario& base, int count,
                                           std::uint64_t seed);

/// Annotated samples for offline training: one RCA prompt per generated
/// fault scenario, answered by the scripted oracle.
std::vector<training::AnnotatedSample> annotated_dataset(const sim::Scenario& base, int count,
                                                         std::uint64_t seed);

struct RcaCaseRow {
  std::string scenario;
  LabelSet truth;
  std::vector<RootLabel> predicted;  // ranked
  bool top1_correct = false;
  int format_failures = 0;
};

struct RcaReport {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;
  std::vector<RcaCaseRow> cases;
};

/// One RCA query per scenario through the full prompt/generate/parse path.
/// Throws ConfigError if a scenario has no fault active at the observation tick.
RcaReport run_rca_eval(std::span<const sim::Scenario> scenarios, policy::PolicyBackend& policy,
                       const control::ControlConfig& config);

inline constexpr std::array<double, 8> kPercentiles = {50, 66, 75, 80, 90, 95, 99, 99.99};
inline constexpr int kPeriods = 5;

/// Nearest-rank percentile of sorted samples: the ceil(p/100 * n)-th smallest.
double nearest_rank(std::span<const double> sorted, double p);

struct PeriodStats {
  Tick first_tick = 0;
  Tick last_tick = 0;
  double mean_rps = 0.0;
  double mean_latency_ms = 0.0;

  friend bool operator==(const PeriodStats&, const PeriodStats&) = default;
};

struct SchedulingReport {
  std::string scenario;
  std::string policy;
  int iterations = 0;
  int executed_actions = 0;
  int rejected_actions = 0;
  int audit_violations = 0;
  double slo_violation_fraction = 0.0;  // ticks whose entry latency exceeds its SLO
  std::vector<PeriodStats> periods;
  std::vector<std::pair<double, double>> percentiles;  // (p, latency ms)
  std::vector<std::pair<double, double>> cdf;          // (latency ms, cumulative fraction)

  friend bool operator==(const SchedulingReport&, const SchedulingReport&) = default;
};

/// Pure aggregation of a run's per-tick metrics and latency samples.
SchedulingReport summarize(std::span<const control::TickMetrics> ticks,
                           std::span<const double> latency_samples);

/// Drives the allocation loop for `horizon` ticks and aggregates it. Throws
/// ConfigError unless horizon is a multiple of 5 intervals.
SchedulingReport run_sched_eval(const sim::Scenario& scenario, control::ControlConfig config,
                                policy::PolicyBackend& policy, Tick horizon,
                                std::vector<control::EpisodeRecord>* episodes = nullptr);

}  // namespace cotctl::eval
