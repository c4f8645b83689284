// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <setupkit/bias.hpp>
#include <setupkit/search.hpp>

namespace {

using namespace setupkit;

void run_search(benchmark::State& state, Method method) {
  const AnalyticCellModel model = base_model(Topology::Dff);
  const SearchConfig cfg;
  std::uint64_t calls = 0;
  for (auto _ : state) {
    AnalyticOracle o(model);
    const Expansion e = expand_bracket(o, 7.0, 7.0, FailSide::Low, cfg);
    const SearchResult r = search(method, o, e.bracket, cfg);
    benchmark::DoNotOptimize(r.root);
    calls += o.calls();
  }
  state.counters["calls"] = benchmark::Counter(static_cast<double>(calls), benchmark::Counter::kAvgIterations);
}

void BM_Bisection(benchmark::State& s) { run_search(s, Method::Bisection); }
void BM_RegulaFalsi(benchmark::State& s) { run_search(s, Method::RegulaFalsi); }
void BM_Quadratic(benchmark::State& s) { run_search(s, Method::Quadratic); }
void BM_Brent(benchmark::State& s) { run_search(s, Method::Brent); }
void BM_Beira(benchmark::State& s) { run_search(s, Method::Beira); }

void BM_SolveBias(benchmark::State& state) {
  const double sigma = 1e-3 * static_cast<double>(state.range(0));
  double x0 = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_bias(x0, sigma).epsilon);
    x0 = x0 > 0.9 ? 0.05 : x0 + 0.01;
  }
}

}  // namespace

BENCHMARK(BM_Bisection);
BENCHMARK(BM_RegulaFalsi);
BENCHMARK(BM_Quadratic);
BENCHMARK(BM_Brent);
BENCHMARK(BM_Beira);
BENCHMARK(BM_SolveBias)->Arg(1)->Arg(100)->Arg(10000);
BENCHMARK_MAIN();
