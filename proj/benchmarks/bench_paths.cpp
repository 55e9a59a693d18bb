#include <benchmark/benchmark.h>

#include <random>

#include "leap/graph.hpp"
#include "leap/paths.hpp"

namespace {

leap::graph::Graph random_graph(leap::graph::NodeId n, double p,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<leap::graph::Edge> es;
  for (leap::graph::NodeId i = 0; i < n; ++i)
    for (leap::graph::NodeId j = i + 1; j < n; ++j)
      if (dist(rng) < p) es.push_back({i, j});
  return leap::graph::Graph(n, false, false, std::move(es));
}

void BM_enumerate_paths(benchmark::State& state) {
  auto g = random_graph(static_cast<leap::graph::NodeId>(state.range(0)),
                        0.05, 42);
  leap::paths::AssemblerConfig cfg;
  cfg.cap = 50;
  cfg.seed = 7;
  std::size_t l = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    auto ps = leap::paths::enumerate_paths(g, 0, 1, l, cfg);
    benchmark::DoNotOptimize(ps);
  }
}
BENCHMARK(BM_enumerate_paths)
    ->Args({100, 3})
    ->Args({100, 4})
    ->Args({300, 3})
    ->Args({300, 4});

void BM_assemble_ordered(benchmark::State& state) {
  auto g = random_graph(200, 0.05, 9);
  leap::paths::AssemblerConfig cfg;
  cfg.lengths = {3, 4};
  cfg.cap = 50;
  cfg.seed = 3;
  cfg.exclude_direct_edge = true;
  for (auto _ : state) {
    auto sets = leap::paths::assemble(g, 0, 1, cfg);
    for (auto& [l, ps] : sets) ps = leap::paths::order_paths(ps, g);
    benchmark::DoNotOptimize(sets);
  }
}
BENCHMARK(BM_assemble_ordered);

}  // namespace

BENCHMARK_MAIN();
