#pragma once

namespace cotctl::queueing {

struct MmcResult {
  double utilization = 0.0;       // rho = lambda / (c mu), unclamped
  double wait_probability = 0.0;  // Erlang-C
  double mean_wait_s = 0.0;
  double service_time_s = 0.0;    // 1 / mu
  double mean_sojourn_s = 0.0;    // mean_wait_s + service_time_s
  bool saturated = false;         // rho >= 1, c == 0 or mu == 0
};

/// Erlang-C probability of waiting for `servers` servers at offered load
/// a = lambda / mu, evaluated through the Erlang-B recursion. Requires
/// a < servers.
double erlang_c(int servers, double offered_load);

/// Steady-state M/M/c metrics. Saturated queues report infinite wait.
MmcResult mmc(double arrival_rate, double service_rate, int servers);

}  // namespace cotctl::queueing
