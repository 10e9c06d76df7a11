#include <benchmark/benchmark.h>

#include <random>

#include "cfid/features.hpp"

namespace {

cfid::CarFollowingSequence noisy_window(int frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  cfid::CarFollowingSequence seq;
  seq.dt = 0.1;
  seq.frames.reserve(static_cast<std::size_t>(frames));
  for (int t = 0; t < frames; ++t)
    seq.frames.push_back({20.0 + g(rng), 0.2 * g(rng), 25.0 + 2.0 * g(rng), g(rng)});
  return seq;
}

void ExtractFeatures(benchmark::State& state) {
  const auto seq = noisy_window(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    auto f = cfid::extract_features(seq);
    benchmark::DoNotOptimize(f);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(ExtractFeatures)->Range(150, 150 << 4)->Complexity();

void StandardizeBatch(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(5.0, 2.0);
  std::vector<cfid::RawFeatureVector> xs(1024);
  for (auto& x : xs)
    for (auto& v : x.f) v = g(rng);
  const auto s = cfid::fit_standardizer(xs);
  for (auto _ : state)
    for (const auto& x : xs) {
      auto z = cfid::standardize(x, s);
      benchmark::DoNotOptimize(z);
    }
}
BENCHMARK(StandardizeBatch);

}  // namespace
