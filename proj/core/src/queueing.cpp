#include "cotctl/queueing.hpp"

#include <limits>

namespace cotctl::queueing {

double erlang_c(int servers, double offered_load) {
  if (offered_load <= 0.0) return 0.0;
  double erlang_b = 1.0;
  for (int k = 1; k <= servers; ++k) {
    erlang_b = offered_load * erlang_b / (k + offered_load * erlang_b);
  }
  const double rho = offered_load / servers;
  return erlang_b / (1.0 - rho * (1.0 - erlang_b));
}

MmcResult mmc(double arrival_rate, double service_rate, int servers) {
  MmcResult r;
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (servers <= 0 || service_rate <= 0.0) {
    r.utilization = arrival_rate > 0.0 ? inf : 0.0;
    r.service_time_s = service_rate > 0.0 ? 1.0 / service_rate : inf;
    r.mean_wait_s = inf;
    r.mean_sojourn_s = inf;
    r.wait_probability = 1.0;
    r.saturated = true;
    return r;
  }
  r.service_time_s = 1.0 / service_rate;
  r.utilization = arrival_rate / (servers * service_rate);
  if (r.utilization >= 1.0) {
    r.wait_probability = 1.0;
    r.mean_wait_s = inf;
    r.mean_sojourn_s = inf;
    r.saturated = true;
    return r;
  }
  r.wait_probability = erlang_c(servers, arrival_rate / service_rate);
  r.mean_wait_s = arrival_rate > 0.0
                      ? r.wait_probability / (servers * service_rate - arrival_rate)
                      : 0.0;
  r.mean_sojourn_s = r.mean_wait_s + r.service_time_s;
  return r;
}

}  // namespace cotctl::queueing
