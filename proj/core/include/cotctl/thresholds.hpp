#pragma once

#include <map>

#include "cotctl/types.hpp"

namespace cotctl {

// Two cut points splitting a metric into Low / Medium / High.
struct Cuts {
  double lower = 0.5;
  double upper = 0.8;
};

struct ThresholdTable {
  Cuts cpu{0.5, 0.8};
  Cuts mem{0.5, 0.8};
  Cuts latency{0.5, 1.0};  // relative to the service's SLO
  Cuts rps{50.0, 150.0};   // absolute entry arrival rate
  double slo_ms = 500.0;
  // Latency/SLO above this ratio (and not violated) is reported AtRisk.
  double at_risk_ratio = 0.8;
  std::map<ServiceId, double> service_slo_ms;

  double slo_for(ServiceId id) const {
    auto it = service_slo_ms.find(id);
    return it != service_slo_ms.end() ? it->second : slo_ms;
  }

  /// Throws ConfigError unless every cut pair is strictly increasing and
  /// every SLO is positive.
  void validate() const;
};

}  // namespace cotctl
