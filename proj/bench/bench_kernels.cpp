// Serial reference kernels against the OpenMP ones. The thread count is the
// second benchmark argument for the parallel variants.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "plard/adt.hpp"
#include "plard/kernels.hpp"

namespace {

using namespace plard;

AltitudeMap dense_map(int w, int h) {
  AltitudeMap m(w, h);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0), alt(-1.0, 2.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (u(rng) < 0.6) m.set(x, y, alt(rng));
  return m;
}

void BM_AdtSerial(benchmark::State& state) {
  const auto map = dense_map(1024, 256);
  const int window = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(serial::adt_transform(map, window));
}

void BM_AdtParallel(benchmark::State& state) {
  const auto map = dense_map(1024, 256);
  const int window = static_cast<int>(state.range(0));
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(adt_transform(map, window));
}

struct ConvCase {
  kernels::ConvGeometry g;
  std::vector<double> in, weight, bias, out;
};

ConvCase conv_case(int channels) {
  ConvCase c;
  c.g.in_channels = channels;
  c.g.out_channels = channels;
  c.g.kernel = 3;
  c.g.padding = 1;
  c.g.in_h = 48;
  c.g.in_w = 160;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.1);
  c.in.resize(static_cast<std::size_t>(channels) * 48 * 160);
  c.weight.resize(static_cast<std::size_t>(channels) * channels * 9);
  c.bias.resize(static_cast<std::size_t>(channels));
  for (auto* v : {&c.in, &c.weight, &c.bias})
    for (double& x : *v) x = n(rng);
  c.out.resize(static_cast<std::size_t>(channels) * c.g.out_h() * c.g.out_w());
  return c;
}

void BM_ConvSerial(benchmark::State& state) {
  auto c = conv_case(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    kernels::serial::conv2d_forward(c.g, c.in.data(), c.weight.data(), c.bias.data(), c.out.data());
    benchmark::ClobberMemory();
  }
  state.counters["MAC/s"] = benchmark::Counter(double(c.g.macs()), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_ConvParallel(benchmark::State& state) {
  auto c = conv_case(static_cast<int>(state.range(0)));
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    kernels::conv2d_forward(c.g, c.in.data(), c.weight.data(), c.bias.data(), c.out.data());
    benchmark::ClobberMemory();
  }
  state.counters["MAC/s"] = benchmark::Counter(double(c.g.macs()), benchmark::Counter::kIsIterationInvariantRate);
}

}  // namespace

BENCHMARK(BM_AdtSerial)->Arg(3)->Arg(7)->Arg(15)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdtParallel)->ArgsProduct({{3, 7, 15}, {1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ConvSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvParallel)->ArgsProduct({{16, 64}, {1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
