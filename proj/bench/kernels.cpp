// Serial reference vs batched OpenMP kernels on pipeline-sized work:
// default network, lookback 24, three features.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "gridcast/dispatch.hpp"
#include "gridcast/lstm.hpp"
#include "gridcast/lstm_reference.hpp"
#include "gridcast/random.hpp"

using namespace gridcast;

namespace {

std::vector<WindowedSample> windows(std::size_t count) {
  std::mt19937_64 rng(3);
  std::vector<WindowedSample> out(count);
  for (auto& s : out) {
    s.input = Eigen::MatrixXd::NullaryExpr(24, 3, [&] { return unit_uniform(rng); });
    s.label = unit_uniform(rng);
  }
  return out;
}

lstm::NetworkParameters network() { return lstm::init_params(lstm::NetworkConfig{}); }

void BM_GradientReference(benchmark::State& state) {
  const auto p = network();
  const auto batch = windows(static_cast<std::size_t>(state.range(0)));
  std::vector<double> labels;
  for (const auto& s : batch) labels.push_back(s.label);
  for (auto _ : state) {
    std::vector<lstm::reference::SampleTrace> traces;
    for (std::size_t i = 0; i < batch.size(); ++i) traces.push_back(lstm::reference::forward(p, batch[i].input, true, 7, i));
    benchmark::DoNotOptimize(lstm::reference::backward(p, traces, labels));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GradientBatched(benchmark::State& state) {
  const auto p = network();
  const auto batch = windows(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lstm::compute_gradient(p, batch, true, 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PredictReference(benchmark::State& state) {
  const auto p = network();
  const auto batch = windows(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    for (const auto& s : batch) benchmark::DoNotOptimize(lstm::reference::forward(p, s.input, false, 0).prediction);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PredictBatched(benchmark::State& state) {
  const auto p = network();
  const auto batch = windows(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lstm::predict(p, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DispatchDay(benchmark::State& state) {
  std::mt19937_64 rng(5);
  dispatch::DispatchCase c;
  c.fleet = dispatch::reference_fleet();
  for (int t = 0; t < 24; ++t) {
    c.demand.push_back(uniform(rng, 60.0, 110.0));
    c.forecast_renewable.push_back(uniform(rng, 0.0, 40.0));
    c.actual_renewable.push_back(uniform(rng, 0.0, 40.0));
  }
  for (auto _ : state) {
    const auto da = dispatch::solve_da(c);
    benchmark::DoNotOptimize(dispatch::solve_rt(c, da));
  }
}

}  // namespace

BENCHMARK(BM_GradientReference)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientBatched)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictReference)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictBatched)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DispatchDay)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
