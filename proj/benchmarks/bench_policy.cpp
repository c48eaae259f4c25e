#include <benchmark/benchmark.h>

#include <numeric>

#include "cotctl/toy_policy.hpp"
#include "cotctl/training.hpp"

namespace {

using namespace cotctl;

void BM_ToyGenerate(benchmark::State& state) {
  const auto p = policy::TokenSequencePolicy::over(Vocabulary::standard(),
                                                   static_cast<int>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto samples = p.generate_from(0, 8, ++seed);
    benchmark::DoNotOptimize(samples.data());
  }
}
BENCHMARK(BM_ToyGenerate)->Arg(64)->Arg(256);

void BM_SftLossGradient(benchmark::State& state) {
  const auto p = policy::TokenSequencePolicy::over(Vocabulary::standard(), 256);
  training::AnnotatedSample s;
  s.prompt.tokens = {0};
  s.response.resize(static_cast<std::size_t>(state.range(0)));
  std::iota(s.response.begin(), s.response.end(), 2);
  for (auto _ : state) {
    auto l = training::sft_loss(p, s);
    benchmark::DoNotOptimize(l.value);
  }
}
BENCHMARK(BM_SftLossGradient)->Arg(16)->Arg(128);

}  // namespace
