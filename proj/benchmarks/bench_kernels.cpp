#include <benchmark/benchmark.h>

#include "dip/autograd.hpp"
#include "dip/imaging.hpp"
#include "dip/kernels.hpp"
#include "dip/network.hpp"

namespace {

using namespace dip;

void BM_Conv2d(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const Tensor x = rand_uniform(rng, {channels, side, side}, 0, 1);
  const Tensor w = rand_normal(rng, {channels, channels, 3, 3}, 0, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::conv2d_raw(x, w, {1, 1}));
  // multiply-adds per output pixel times pixels
  state.counters["MAC/s"] = benchmark::Counter(static_cast<double>(side * side * channels * channels * 9),
                                               benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv2d)->Args({64, 16})->Args({64, 128})->Args({128, 32})->Unit(benchmark::kMillisecond);

void BM_LanczosDown(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor x = rand_uniform(rng, {3, side, side}, 0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::resample_raw(x, kernels::ResampleMode::LanczosDown, 4));
}
BENCHMARK(BM_LanczosDown)->Arg(128)->Arg(512)->Unit(benchmark::kMicrosecond);

void BM_BicubicUp(benchmark::State& state) {
  Rng rng(3);
  const Tensor x = rand_uniform(rng, {3, 32, 32}, 0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(img::bicubic_up(x, 4));
}
BENCHMARK(BM_BicubicUp)->Unit(benchmark::kMicrosecond);

void BM_HourglassStep(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const bool backward = state.range(1) != 0;
  const net::Generator g = net::build(net::ArchitectureSpec::hourglass());
  const net::ParameterSet params = g.init(4);
  Rng rng(5);
  const Tensor z = rand_uniform(rng, {32, side, side}, 0, 0.1);
  for (auto _ : state) {
    ag::Tape tape;
    const auto bound = g.forward(tape, params, z, backward);
    if (backward) benchmark::DoNotOptimize(tape.backward(ag::mean(bound.image)));
    benchmark::DoNotOptimize(bound.image.value());
  }
}
BENCHMARK(BM_HourglassStep)
    ->ArgsProduct({{64, 128}, {0, 1}})
    ->ArgNames({"side", "backward"})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
