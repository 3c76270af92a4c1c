#include <benchmark/benchmark.h>

#include <random>

#include "dsopt/forecaster.hpp"
#include "dsopt/trainer.hpp"

using namespace dsopt;

namespace {

ForecasterConfig bench_config(std::size_t hidden) {
  ForecasterConfig cfg;
  cfg.window_len = 30;
  cfg.hidden = {hidden, hidden / 2};
  cfg.dense_units = 32;
  cfg.embed_dim = 8;
  cfg.vocab_sizes = {12};
  cfg.dropout = 0.0;
  return cfg;
}

std::vector<double> bench_window(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> w(n);
  for (auto& v : w) v = d(rng);
  return w;
}

}  // namespace

static void BM_ForecasterForward(benchmark::State& state) {
  Forecaster f(bench_config(std::size_t(state.range(0))), 7);
  const auto window = bench_window(30);
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.forward(window, {3}).mu);
  }
}
BENCHMARK(BM_ForecasterForward)->Arg(16)->Arg(64)->Arg(128);

static void BM_ForecasterBackward(benchmark::State& state) {
  Forecaster f(bench_config(std::size_t(state.range(0))), 7);
  const auto window = bench_window(30);
  auto params = f.params();
  for (auto _ : state) {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    for (auto& [name, t] : params) tape.watch(*t);
    auto out = f.forward_nodes(window, {3}, nullptr);
    ad::Tensor loss = ad::square(ad::add_const(out.mu, -0.5));
    ad::Gradients g = tape.backward(loss);
    benchmark::DoNotOptimize(g.at_node(out.mu.node));
  }
}
BENCHMARK(BM_ForecasterBackward)->Arg(16)->Arg(64)->Arg(128);

static void BM_LstmStep(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const std::size_t h = std::size_t(state.range(0));
  RecurrentLayer layer(CellKind::lstm, h, h, rng);
  const auto x = bench_window(h);
  for (auto _ : state) {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    auto s = layer.initial_state();
    s = layer.step(ad::Tensor::vector(x), s);
    benchmark::DoNotOptimize(s.h.values.data());
  }
}
BENCHMARK(BM_LstmStep)->Arg(32)->Arg(128);

static void BM_AdamStep(benchmark::State& state) {
  const std::size_t n = std::size_t(state.range(0));
  ad::Tensor p = ad::Tensor::zeros({n});
  NamedParams params{{"p", &p}};
  TrainConfig cfg;
  AdamOptimizer adam(params, cfg);
  std::vector<std::vector<double>> grads{std::vector<double>(n, 0.01)};
  for (auto _ : state) {
    adam.step(params, grads);
    benchmark::DoNotOptimize(p.values.data());
  }
}
BENCHMARK(BM_AdamStep)->Arg(1024)->Arg(65536);
