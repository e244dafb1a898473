#include <benchmark/benchmark.h>

#include "freqdenoise/data.hpp"
#include "freqdenoise/model.hpp"
#include "freqdenoise/training.hpp"

using namespace freqdenoise;

namespace {

struct Fixture {
  ModelConfig cfg;  // default: N = 512, steps 3, channels 1-8-8-1
  ModelParams<float> params = init_params<float>(cfg, 1);
  Tensor<float> noisy;
  Tensor<float> psd_noise;
  Tensor<float> psd_noisy;

  Fixture() {
    auto corpus = generate_synthetic_corpus<float>(2, 7, cfg.signal_length);
    auto pools = make_pools(corpus);
    auto mix = synthesize(pools.eeg[0], pools.emg[0], -3.0);
    auto ex = standardize(mix);
    auto in = make_model_inputs(ex);
    noisy = in.noisy;
    psd_noise = in.psd_noise;
    psd_noisy = in.psd_noisy;
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_ForwardDefault(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) {
    Tensor<float> out =
        denoise(f.cfg, f.params, f.noisy, f.psd_noise, f.psd_noisy);
    benchmark::DoNotOptimize(out.raw());
  }
}
BENCHMARK(BM_ForwardDefault)->Unit(benchmark::kMillisecond);

void BM_ForwardFftConv(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) {
    Tensor<float> out = denoise(f.cfg, f.params, f.noisy, f.psd_noise,
                                f.psd_noisy, ConvPolicy::Fft);
    benchmark::DoNotOptimize(out.raw());
  }
}
BENCHMARK(BM_ForwardFftConv)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) {
    Graph<float> g;
    ParamVars<float> pv = bind_params(g, f.params);
    Var<float> target = g.leaf(f.noisy);
    Var<float> pred = model_forward(g, f.cfg, g.leaf(f.noisy),
                                    g.leaf(f.psd_noise), g.leaf(f.psd_noisy),
                                    pv);
    Var<float> l = loss(g, target, pred, LossWeights{});
    GradientMap<float> grads = g.backward(l);
    benchmark::DoNotOptimize(&grads);
  }
}
BENCHMARK(BM_ForwardBackward)->Unit(benchmark::kMillisecond);

void BM_AdamaxStep(benchmark::State& state) {
  Fixture& f = fixture();
  ModelParams<float> params = init_params<float>(f.cfg, 2);
  OptimizerState<float> opt = OptimizerState<float>::zeros_like(params);
  std::vector<Tensor<float>> grads;
  params.for_each([&](const std::string&, const Tensor<float>& t) {
    grads.push_back(Tensor<float>::full(t.shape(), 0.01f));
  });
  for (auto _ : state) {
    adamax_step(params, grads, opt);
    benchmark::DoNotOptimize(opt.t);
  }
}
BENCHMARK(BM_AdamaxStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
