#include <benchmark/benchmark.h>

#include "cotctl/simulator.hpp"

namespace {

using namespace cotctl;

sim::Simulator sockshop() {
  return sim::Simulator(sim::load_scenario(std::filesystem::path(COTCTL_SCENARIO_DIR) / "sockshop.json"));
}

void BM_SimulatorStep(benchmark::State& state) {
  const auto simulator = sockshop();
  auto st = simulator.initial_state();
  for (auto _ : state) {
    st = simulator.step(st, {});
    benchmark::DoNotOptimize(st.latency_ms);
  }
}
BENCHMARK(BM_SimulatorStep);

void BM_LatencySamples(benchmark::State& state) {
  const auto simulator = sockshop();
  const auto st = simulator.initial_state();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto samples = simulator.sample_latency_distribution(st, static_cast<std::size_t>(state.range(0)), ++seed);
    benchmark::DoNotOptimize(samples.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LatencySamples)->Arg(200)->Arg(2000);

}  // namespace
