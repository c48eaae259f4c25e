#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cotctl/simulator.hpp"

namespace cotctl::testing {

inline std::filesystem::path data_dir() { return COTCTL_TEST_DATA_DIR; }
inline std::filesystem::path scenario_dir() { return COTCTL_SCENARIO_DIR; }

inline std::string read_data(const std::string& name) {
  std::ifstream in(data_dir() / name, std::ios::binary);
  if (!in) throw std::runtime_error("missing test data " + name);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline sim::Scenario shipped(const std::string& name) {
  return sim::load_scenario(scenario_dir() / (name + ".json"));
}

inline sim::ServiceSpec service(ServiceId id, double mu, std::vector<ServiceId> downstream = {},
                                ResourceType profile = ResourceType::Cpu) {
  sim::ServiceSpec s;
  s.id = id;
  s.name = "svc-" + std::to_string(id);
  s.profile = profile;
  s.base_service_rate = mu;
  s.cpu_request = 500;
  s.mem_request = 256;
  s.downstream = std::move(downstream);
  return s;
}

inline sim::Scenario make_scenario(std::vector<sim::ServiceSpec> services, double rps,
                                   int machines = 2, std::int64_t cpu = 16000) {
  sim::Scenario s;
  s.name = "fixture";
  std::vector<sim::Machine> ms;
  for (int i = 1; i <= machines; ++i) ms.push_back(sim::Machine{i, cpu, 16384});
  const ServiceId entry = services.front().id;
  s.topology = sim::Topology(std::move(ms), std::move(services), entry);
  s.workload.points = {{0, rps}};
  return s;
}

/// One service at rate `rps` with per-replica rate `mu`.
inline sim::Scenario single_service(double rps, double mu) {
  return make_scenario({service(1, mu)}, rps);
}

/// 1 -> 2 -> 3 chain.
inline sim::Scenario chain(double rps) {
  return make_scenario({service(1, 200, {2}), service(2, 150, {3}), service(3, 120)}, rps);
}

}  // namespace cotctl::testing
