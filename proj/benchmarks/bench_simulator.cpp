#include <benchmark/benchmark.h>

#include <random>

#include "dsopt/evaluate.hpp"

using namespace dsopt;

namespace {

SupplyState bench_state() {
  SupplyState s;
  s.c_prod = 1.0;
  s.c_hold = 0.5;
  s.c_trans = {0.2, 0.3, 0.4};
  s.c_short = 2.0;
  s.lead_actual = 2.0;
  s.lead_max = 5.0;
  return s;
}

}  // namespace

static void BM_SimulateHorizon(benchmark::State& state) {
  const std::size_t horizon = std::size_t(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(50.0, 150.0);
  std::vector<double> demand(horizon);
  for (auto& v : demand) v = d(rng);
  std::vector<SupplyState> states(horizon, bench_state());
  PolicyFn policy = [](const PolicyContext& ctx) {
    PeriodDecision dec;
    dec.order_qty = std::max(0.0, 100.0 - ctx.on_hand - ctx.pipeline + 20.0);
    return dec;
  };
  for (auto _ : state) {
    SimResult r = simulate(policy, demand, states, {100.0});
    benchmark::DoNotOptimize(r.metrics.total_cost);
  }
  state.SetItemsProcessed(std::int64_t(state.iterations()) * std::int64_t(horizon));
}
BENCHMARK(BM_SimulateHorizon)->Arg(1000)->Arg(100000);

static void BM_ForecastMetrics(benchmark::State& state) {
  const std::size_t n = std::size_t(state.range(0));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(1.0, 100.0);
  std::vector<double> a(n), p(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = d(rng);
    p[i] = d(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(forecast_metrics(a, p).smape);
  }
}
BENCHMARK(BM_ForecastMetrics)->Arg(10000);
