#include <benchmark/benchmark.h>

#include "cotctl/cot.hpp"
#include "cotctl/policy.hpp"

namespace {

using namespace cotctl;

void BM_ParseOracleOutput(benchmark::State& state) {
  const LabelSet truth = {{4, ResourceType::Cpu}, {7, ResourceType::Memory}};
  const auto tokens = Vocabulary::standard().tokenize(policy::ScriptedOracle::respond(truth));
  for (auto _ : state) {
    auto out = cot::parse(tokens);
    benchmark::DoNotOptimize(out.root.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tokens.size()));
}
BENCHMARK(BM_ParseOracleOutput);

void BM_Tokenize(benchmark::State& state) {
  const auto text = policy::ScriptedOracle::respond({{4, ResourceType::Cpu}});
  for (auto _ : state) {
    auto tokens = Vocabulary::standard().tokenize(text);
    benchmark::DoNotOptimize(tokens.data());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_Tokenize);

}  // namespace
