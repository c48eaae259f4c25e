#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotctl/simulator.hpp"
#include "cotctl/thresholds.hpp"
#include "cotctl/types.hpp"

namespace cotctl::encoder {

enum class Level { Low = 0, Medium = 1, High = 2 };

std::string_view to_string(Level l);
std::optional<Level> parse_level(std::string_view s);

enum class SloStatus { Ok, AtRisk, Violated };

std::string_view to_string(SloStatus s);

/// Low below `lower`, Medium in [lower, upper), High from `upper` on.
Level bin(double value, const Cuts& cuts);

struct ServiceObservation {
  ServiceId id = 0;
  Level cpu = Level::Low;
  Level mem = Level::Low;
  Level latency = Level::Low;
  int replicas = 0;
  int ready = 0;
  SloStatus slo = SloStatus::Ok;

  friend bool operator==(const ServiceObservation&, const ServiceObservation&) = default;
};

struct DiscretizedState {
  Tick tick = 0;
  Level arrival = Level::Low;
  std::vector<ServiceObservation> services;  // ascending id

  const ServiceObservation* find(ServiceId id) const;
  int slo_violations() const;
  /// [arrival, then cpu/mem/latency per service], levels as 0/1/2.
  std::vector<int> features() const;

  friend bool operator==(const DiscretizedState&, const DiscretizedState&) = default;
};

DiscretizedState discretize(const sim::ClusterState& state, const sim::Topology& topology,
                            const ThresholdTable& thresholds);

/// Compact call-graph text, one `#id @P -> callees` line per service plus a
/// `#id @p <- callers` line for services with callers. Ordered by id.
std::string encode_call_graph(const sim::Topology& topology);

/// One line per service describing role, profile, readiness and allocation.
std::string describe_deployments(const sim::Topology& topology, const sim::ClusterState& state);

/// Improved iff the number of SLO-violating services strictly drops,
/// Degraded iff it strictly rises, Neutral otherwise.
Outcome classify_outcome(const DiscretizedState& before, const DiscretizedState& after);

struct WorkloadForecast {
  double rate = 0.0;  // requests/s
  std::optional<double> confidence;
};

/// Seam for an external forecasting service.
class WorkloadPredictor {
 public:
  virtual ~WorkloadPredictor() = default;
  virtual WorkloadForecast predict(std::span<const double> recent, int horizon) const = 0;
};

/// Exponentially weighted moving average; flat over the horizon.
class EwmaPredictor final : public WorkloadPredictor {
 public:
  explicit EwmaPredictor(double decay = 0.5);
  WorkloadForecast predict(std::span<const double> recent, int horizon) const override;

 private:
  double decay_;
};

/// Default in-process forecast (EWMA, decay 0.5). `recent` must be non-empty.
WorkloadForecast predict_workload(std::span<const double> recent, int horizon);

}  // namespace cotctl::encoder
