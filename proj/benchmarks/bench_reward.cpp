#include <benchmark/benchmark.h>

#include "cotctl/policy.hpp"
#include "cotctl/reward.hpp"

namespace {

using namespace cotctl;

void BM_ScoreOutput(benchmark::State& state) {
  const LabelSet truth = {{4, ResourceType::Cpu}, {7, ResourceType::Memory}};
  const auto out = cot::parse_text(policy::ScriptedOracle::respond({{4, ResourceType::Cpu}}));
  const reward::RewardConfig cfg;
  for (auto _ : state) {
    auto r = reward::score(out, truth, -0.001, cfg);
    benchmark::DoNotOptimize(r.r_total);
  }
}
BENCHMARK(BM_ScoreOutput);

void BM_MatchCounts(benchmark::State& state) {
  LabelSet predicted, truth;
  for (int i = 1; i <= 8; ++i) {
    predicted.insert({i, ResourceType::Cpu});
    truth.insert({i, i % 2 ? ResourceType::Cpu : ResourceType::Memory});
  }
  for (auto _ : state) {
    auto c = reward::match_counts(predicted, truth);
    benchmark::DoNotOptimize(c.tp);
  }
}
BENCHMARK(BM_MatchCounts);

}  // namespace
