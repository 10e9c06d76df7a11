#include <benchmark/benchmark.h>

#include "cfid/synthdata.hpp"

namespace {

void GenerateCorpus(benchmark::State& state) {
  const auto drivers = cfid::preset_drivers("easy4");
  cfid::ScenarioSpec sc;
  sc.duration_min = 30.0;
  sc.duration_max = 90.0;
  sc.seed = 1;
  const int per_driver = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto ds = cfid::generate_corpus(drivers, sc, per_driver);
    benchmark::DoNotOptimize(ds);
  }
  state.SetItemsProcessed(state.iterations() * 4 * per_driver);
}
BENCHMARK(GenerateCorpus)->Arg(5)->Arg(25)->Unit(benchmark::kMillisecond);

}  // namespace
