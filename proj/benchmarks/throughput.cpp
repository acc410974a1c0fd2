#include <benchmark/benchmark.h>

#include "random_agents.hpp"

namespace {

void BM_RandomAgentTicks(benchmark::State& state) {
  arena::bench::RandomAgents harness(80, static_cast<int>(state.range(0)), 1);
  std::int64_t agent_ticks = 0;
  for (auto _ : state) agent_ticks += static_cast<std::int64_t>(harness.step());
  state.counters["agent_ticks_per_second"] =
      benchmark::Counter(static_cast<double>(agent_ticks), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_RandomAgentTicks)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_MapGeneration(benchmark::State& state) {
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(arena::generate_map(seed++, 80, arena::FractalParams{}, 16));
}
BENCHMARK(BM_MapGeneration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
