#include <benchmark/benchmark.h>

#include <vector>

#include "freqdenoise/conv.hpp"
#include "freqdenoise/fft.hpp"
#include "freqdenoise/rng.hpp"

using namespace freqdenoise;

namespace {

std::vector<float> random_floats(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

void BM_Conv1dDirect(benchmark::State& state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 512, k = 512;
  auto in = random_floats(c * n, 1);
  auto ker = random_floats(c * c * k, 2);
  std::vector<float> out(c * n);
  for (auto _ : state) {
    detail::conv1d_same_direct(in.data(), c, n, ker.data(), c, k, out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * c * c * n * k);
}
BENCHMARK(BM_Conv1dDirect)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Conv1dFft(benchmark::State& state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 512, k = 512;
  auto in = random_floats(c * n, 1);
  auto ker = random_floats(c * c * k, 2);
  std::vector<float> out(c * n);
  for (auto _ : state) {
    detail::conv1d_same_fft(in.data(), c, n, ker.data(), c, k, out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * c * c * n * k);
}
BENCHMARK(BM_Conv1dFft)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Rfft512(benchmark::State& state) {
  auto x = random_floats(512, 3);
  std::vector<float> re(257), im(257);
  for (auto _ : state) {
    detail::rfft_rows(x.data(), 1, 512, re.data(), im.data());
    benchmark::DoNotOptimize(re.data());
  }
}
BENCHMARK(BM_Rfft512);

void BM_Irfft512(benchmark::State& state) {
  auto re = random_floats(257, 4);
  auto im = random_floats(257, 5);
  std::vector<float> out(512);
  for (auto _ : state) {
    detail::irfft_rows(re.data(), im.data(), 1, 257, out.data());
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Irfft512);

void BM_Psd512(benchmark::State& state) {
  auto x = random_floats(512, 6);
  std::vector<float> out(257);
  for (auto _ : state) {
    detail::psd_rows(x.data(), 1, 512, out.data());
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Psd512);

}  // namespace

BENCHMARK_MAIN();
