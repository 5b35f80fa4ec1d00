#include <benchmark/benchmark.h>

#include <vector>

#include "hypflow/flows.hpp"
#include "hypflow/lorentz.hpp"
#include "hypflow/rng.hpp"
#include "hypflow/training.hpp"
#include "hypflow/wrapped_normal.hpp"

namespace {

using namespace hypflow;

// exp_map_origin on a ManifoldPoint-producing wrapper for benches.
ManifoldPoint exp_map_origin_point(const std::vector<double>& tangent, double R) {
  std::vector<double> amb = exp_map_origin(std::span<const double>(tangent), R, false);
  return ManifoldPoint{amb};
}

void BM_ExpMap(benchmark::State& state) {
  CounterRng rng(7, RngStream::generic);
  double R = 2.0;
  ManifoldPoint o = origin_point(2, R);
  std::vector<double> tv = {0.0, rng.normal(), rng.normal()};
  TangentVector v{tv, o.x};
  ManifoldPoint x = exp_map(o, v, R);
  TangentVector u = log_map(o, x, R);
  for (auto _ : state) {
    benchmark::DoNotOptimize(exp_map(o, u, R));
  }
}
BENCHMARK(BM_ExpMap);

void BM_LogMap(benchmark::State& state) {
  CounterRng rng(7, RngStream::generic);
  double R = 2.0;
  ManifoldPoint o = origin_point(2, R);
  ManifoldPoint x = exp_map_origin_point({rng.normal(), rng.normal()}, R);
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_map(o, x, R));
  }
}
BENCHMARK(BM_LogMap);

void BM_ParallelTransport(benchmark::State& state) {
  CounterRng rng(7, RngStream::generic);
  double R = 2.0;
  ManifoldPoint o = origin_point(2, R);
  ManifoldPoint y = exp_map_origin_point({rng.normal(), rng.normal()}, R);
  TangentVector v{{0.0, rng.normal(), rng.normal()}, o.x};
  for (auto _ : state) {
    benchmark::DoNotOptimize(parallel_transport(o, y, v, R));
  }
}
BENCHMARK(BM_ParallelTransport);

void BM_WrappedNormalLogProb(benchmark::State& state) {
  CounterRng rng(7, RngStream::generic);
  double R = 2.0;
  WrappedNormalParams params{exp_map_origin_point({0.4, -0.3}, R), {1.0, 0.5},
                             CurvatureState::fixed(R)};
  ManifoldPoint z = exp_map_origin_point({rng.normal(), rng.normal()}, R);
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_prob(params, z));
  }
}
BENCHMARK(BM_WrappedNormalLogProb);

FlowStack bench_stack(LayerKind kind, int hidden) {
  CounterRng rng(11, RngStream::param_init);
  return make_flow_stack(kind, 2, 2, hidden, 2.0, rng);
}

void BM_TangentStackLogProb(benchmark::State& state) {
  FlowStack stack = bench_stack(LayerKind::tangent, static_cast<int>(state.range(0)));
  std::vector<double> sp = {0.7, -0.4};
  for (auto _ : state) {
    benchmark::DoNotOptimize(stack.data_log_prob(sp));
  }
}
BENCHMARK(BM_TangentStackLogProb)->Arg(16)->Arg(128);

void BM_WrappedStackLogProb(benchmark::State& state) {
  FlowStack stack = bench_stack(LayerKind::wrapped, static_cast<int>(state.range(0)));
  std::vector<double> sp = {0.7, -0.4};
  for (auto _ : state) {
    benchmark::DoNotOptimize(stack.data_log_prob(sp));
  }
}
BENCHMARK(BM_WrappedStackLogProb)->Arg(16)->Arg(128);

void BM_GradientStep(benchmark::State& state) {
  FlowStack stack = bench_stack(LayerKind::wrapped, static_cast<int>(state.range(0)));
  CounterRng rng(13, RngStream::generic);
  std::vector<std::vector<double>> batch;
  for (int i = 0; i < 16; ++i) batch.push_back({rng.normal(), rng.normal()});
  Tape tape;
  for (auto _ : state) {
    benchmark::DoNotOptimize(stack_loss_gradients(stack, batch, true, &tape));
  }
}
BENCHMARK(BM_GradientStep)->Arg(16)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
