#include <benchmark/benchmark.h>

#include <random>

#include "leap/baselines.hpp"
#include "leap/graph.hpp"

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

void BM_pagerank(benchmark::State& state) {
  auto g = random_graph(static_cast<leap::graph::NodeId>(state.range(0)),
                        0.02, 11);
  for (auto _ : state) {
    auto pr = leap::baselines::pagerank(g);
    benchmark::DoNotOptimize(pr);
  }
}
BENCHMARK(BM_pagerank)->Arg(500)->Arg(2000);

void BM_katz(benchmark::State& state) {
  auto g = random_graph(500, 0.02, 13);
  for (auto _ : state) {
    double s = leap::baselines::katz(g, 0, 1);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_katz);

void BM_auc(benchmark::State& state) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> sc(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<double> s(n), l(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = sc(rng);
    l[i] = coin(rng);
  }
  l[0] = 1.0;
  l[1] = 0.0;
  for (auto _ : state) {
    double a = leap::baselines::auc(s, l);
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_auc)->Arg(1000)->Arg(100000);

}  // namespace
