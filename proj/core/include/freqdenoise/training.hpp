#pragma once

#include <bit>
#include <chrono>
#include <functional>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "freqdenoise/data.hpp"
#include "freqdenoise/graph.hpp"
#include "freqdenoise/model.hpp"

namespace freqdenoise {

struct LossWeights {
  double a = 0.25;  // temporal RRMSE
  double b = 0.25;  // spectral RRMSE
  double c = 0.5;   // log-cosh

  void validate() const {
    if (a < 0 || b < 0 || c < 0 || !(a + b + c > 0)) {
      throw ConfigError("loss_weights must be nonnegative with a+b+c > 0");
    }
  }
};

// Sum of log(cosh(y_i - x_i)), evaluated through the numerically stable
// |d| + log((1 + e^(-2|d|))/2) form.
template <class T>
Var<T> logcosh(Graph<T>& g, Var<T> x, Var<T> y) {
  return g.reduce(g.logcosh_elem(g.elementwise(y, x, EwKind::Sub)),
                  ReduceKind::Sum);
}

// Composite training loss:
//   L = a * RRMSE_t(target, pred) + b * RRMSE_f(target, pred)
//     + c * sum_i log(cosh(pred_i - target_i))
// with the spectral RRMSE running through the differentiable periodogram.
// Zero-weight terms are not built at all, so e.g. a pure log-cosh loss
// works on lengths the transform does not support.
template <class T>
Var<T> loss(Graph<T>& g, Var<T> target, Var<T> pred, const LossWeights& w) {
  w.validate();
  const Tensor<T>& tv = g.value(target);
  if (!tv.same_shape(g.value(pred))) {
    throw DimensionError("loss operands must share a shape");
  }
  double energy = 0.0;
  for (T v : tv.data()) {
    energy += static_cast<double>(v) * static_cast<double>(v);
  }
  if (!(energy > 0.0)) {
    throw DegenerateTargetError("ground truth has zero energy");
  }

  std::optional<Var<T>> total;
  auto add_term = [&](Var<T> term) {
    total = total ? g.elementwise(*total, term, EwKind::Add) : term;
  };
  if (w.a > 0) {
    Var<T> diff = g.elementwise(pred, target, EwKind::Sub);
    Var<T> rt = g.sqrt_elem(g.elementwise(
        g.reduce(diff, ReduceKind::SumSquares),
        g.reduce(target, ReduceKind::SumSquares), EwKind::Div));
    add_term(g.scale(rt, static_cast<T>(w.a)));
  }
  if (w.b > 0) {
    Var<T> psd_t = g.psd(target);
    Var<T> psd_p = g.psd(pred);
    Var<T> psd_diff = g.elementwise(psd_p, psd_t, EwKind::Sub);
    Var<T> rf = g.sqrt_elem(g.elementwise(
        g.reduce(psd_diff, ReduceKind::SumSquares),
        g.reduce(psd_t, ReduceKind::SumSquares), EwKind::Div));
    add_term(g.scale(rf, static_cast<T>(w.b)));
  }
  if (w.c > 0) {
    add_term(g.scale(logcosh(g, target, pred), static_cast<T>(w.c)));
  }
  return *total;
}

// ---- AdaMax ----------------------------------------------------------------

template <class T>
struct OptimizerState {
  std::vector<Tensor<T>> m;  // first moment, canonical parameter order
  std::vector<Tensor<T>> u;  // infinity-norm accumulator
  std::int64_t t = 0;
  double alpha = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;

  static OptimizerState zeros_like(const ModelParams<T>& p) {
    OptimizerState s;
    p.for_each([&](const std::string&, const Tensor<T>& w) {
      s.m.push_back(Tensor<T>::zeros(w.shape()));
      s.u.push_back(Tensor<T>::zeros(w.shape()));
    });
    return s;
  }
};

// One AdaMax update over the canonical parameter order:
//   t += 1
//   m <- b1*m + (1-b1)*g
//   u <- max(b2*u, |g|)
//   w <- w - (alpha / (1 - b1^t)) * m / (u + 1e-8)
template <class T>
void adamax_step(ModelParams<T>& params, const std::vector<Tensor<T>>& grads,
                 OptimizerState<T>& state) {
  constexpr T kNumEps = static_cast<T>(1e-8);
  if (grads.size() != state.m.size()) {
    throw DimensionError("gradient list does not cover all parameters");
  }
  state.t += 1;
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T lr = static_cast<T>(
      state.alpha / (1.0 - std::pow(state.beta1,
                                    static_cast<double>(state.t))));
  std::size_t i = 0;
  params.for_each_mut([&](const std::string&, Tensor<T>& w) {
    const Tensor<T>& g = grads[i];
    if (!g.same_shape(w)) {
      throw DimensionError("gradient shape mismatch at parameter " +
                           std::to_string(i));
    }
    const auto gd = g.data();
    const auto md = state.m[i].data();
    const auto ud = state.u[i].data();
    const auto wd = w.data();
    std::vector<T> nm(gd.size()), nu(gd.size()), nw(gd.size());
    for (std::size_t e = 0; e < gd.size(); ++e) {
      nm[e] = b1 * md[e] + (T(1) - b1) * gd[e];
      nu[e] = std::max(b2 * ud[e], std::abs(gd[e]));
      nw[e] = wd[e] - lr * nm[e] / (nu[e] + kNumEps);
    }
    state.m[i] = Tensor<T>::wrap(w.shape(), std::move(nm));
    state.u[i] = Tensor<T>::wrap(w.shape(), std::move(nu));
    w = Tensor<T>::wrap(w.shape(), std::move(nw));
    ++i;
  });
}

// ---- training loop ---------------------------------------------------------

struct TrainRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double test_loss = 0.0;
  double seconds = 0.0;
  std::uint64_t param_checksum = 0;
};

struct TrainOptions {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  std::size_t steps_per_epoch = 0;  // 0: floor(#train EEG / batch_size)
  double alpha = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  LossWeights weights;
  double snr_train_lo = -7.0;
  double snr_train_hi = 4.0;
  double snr_test_lo = -7.0;
  double snr_test_hi = 2.0;
  std::size_t test_examples = 32;
  std::size_t checkpoint_every = 0;  // epochs; 0 = final checkpoint only
  std::string checkpoint_dir;       // empty = no checkpoint files
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  SnrConvention snr_convention = SnrConvention::RmsDb10;
  ConvPolicy conv_policy = ConvPolicy::Direct;
  std::function<void(const TrainRecord&)> on_epoch;  // progress hook
};

template <class T>
struct SegmentPools {
  std::vector<Segment<T>> eeg;
  std::vector<Segment<T>> eog;
  std::vector<Segment<T>> emg;

  void validate() const {
    if (eeg.empty() || (eog.empty() && emg.empty())) {
      throw EmptyDatasetError(
          "training needs EEG segments plus at least one noise kind");
    }
  }
};

template <class T>
std::vector<Segment<T>> filter_kind(const std::vector<Segment<T>>& segments,
                                    SegmentKind kind) {
  std::vector<Segment<T>> out;
  for (const auto& s : segments) {
    if (s.kind == kind) out.push_back(s);
  }
  return out;
}

template <class T>
SegmentPools<T> make_pools(const std::vector<Segment<T>>& segments) {
  return {filter_kind(segments, SegmentKind::Eeg),
          filter_kind(segments, SegmentKind::Eog),
          filter_kind(segments, SegmentKind::Emg)};
}

// FNV-1a over the f32 little-endian image of the parameters.
template <class T>
std::uint64_t param_checksum(const ModelParams<T>& params) {
  std::uint64_t h = 1469598103934665603ULL;
  params.for_each([&](const std::string&, const Tensor<T>& t) {
    for (T v : t.data()) {
      const auto bits =
          std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int b = 0; b < 4; ++b) {
        h ^= (bits >> (8 * b)) & 0xFF;
        h *= 1099511628211ULL;
      }
    }
  });
  return h;
}

template <class T>
struct TrainResult {
  ModelParams<T> params;
  OptimizerState<T> opt;
  std::vector<TrainRecord> history;
  std::uint64_t epochs_completed = 0;
};

namespace detail {

// Synthesizes the element's example and evaluates loss (+gradients).
// Every random choice flows from the derived stream, so batches are
// reproducible regardless of execution order.
template <class T>
struct ElementResult {
  double loss = 0.0;
  std::vector<Tensor<T>> grads;
};

template <class T>
SegmentKind pick_noise_kind(const SegmentPools<T>& pools, std::size_t elem) {
  if (pools.eog.empty()) return SegmentKind::Emg;
  if (pools.emg.empty()) return SegmentKind::Eog;
  return elem % 2 == 0 ? SegmentKind::Eog : SegmentKind::Emg;
}

template <class T>
ElementResult<T> train_element(const ModelConfig& cfg,
                               const ModelParams<T>& params,
                               const SegmentPools<T>& pools,
                               const TrainOptions& opts, SplitMix64 rng,
                               bool want_grads) {
  const SegmentKind kind = pick_noise_kind(pools, rng.index(2));
  const auto& noise_pool =
      kind == SegmentKind::Eog ? pools.eog : pools.emg;
  const Segment<T>& x = pools.eeg[rng.index(pools.eeg.size())];
  const Segment<T>& n = noise_pool[rng.index(noise_pool.size())];
  const double snr = rng.uniform(opts.snr_train_lo, opts.snr_train_hi);
  NoisyMixture<T> mix = synthesize(x, n, snr, opts.snr_convention);
  StandardizedExample<T> ex = standardize(mix);
  ModelInputs<T> in = make_model_inputs(ex);

  Graph<T> g(opts.conv_policy);
  ParamVars<T> pv = bind_params(g, params);
  Var<T> target = g.leaf(ex.x_hat);
  Var<T> pred = model_forward(g, cfg, g.leaf(in.noisy), g.leaf(in.psd_noise),
                              g.leaf(in.psd_noisy), pv);
  Var<T> l = loss(g, target, pred, opts.weights);

  ElementResult<T> out;
  out.loss = static_cast<double>(g.value(l).at(0));
  if (want_grads) {
    GradientMap<T> gm = g.backward(l);
    out.grads.reserve(pv.ordered.size());
    for (Var<T> v : pv.ordered) out.grads.push_back(gm.at(v));
  }
  return out;
}

// Fixed per-example test synthesis; the stream depends only on (seed, i),
// so the test loss curve is comparable across epochs.
template <class T>
double test_loss(const ModelConfig& cfg, const ModelParams<T>& params,
                 const SegmentPools<T>& pools, const TrainOptions& opts) {
  double acc = 0.0;
  TrainOptions test_opts = opts;
  test_opts.snr_train_lo = opts.snr_test_lo;
  test_opts.snr_train_hi = opts.snr_test_hi;
  for (std::size_t i = 0; i < opts.test_examples; ++i) {
    SplitMix64 rng = derive_stream(opts.seed, {stream_tag::kTestEval, i});
    acc += train_element(cfg, params, pools, test_opts, rng, false).loss;
  }
  return acc / static_cast<double>(opts.test_examples);
}

template <class T>
void run_batch(const ModelConfig& cfg, const ModelParams<T>& params,
               const SegmentPools<T>& pools, const TrainOptions& opts,
               std::size_t epoch, std::size_t step,
               std::vector<ElementResult<T>>& results) {
  results.resize(opts.batch_size);
  auto work = [&](std::size_t first, std::size_t last) {
    for (std::size_t e = first; e < last; ++e) {
      SplitMix64 rng = derive_stream(
          opts.seed, {stream_tag::kTrain, epoch, step, e});
      results[e] = train_element(cfg, params, pools, opts, rng, true);
    }
  };
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(opts.threads, opts.batch_size));
  if (workers == 1) {
    work(0, opts.batch_size);
    return;
  }
  std::vector<std::thread> threads;
  const std::size_t chunk = (opts.batch_size + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t first = w * chunk;
    const std::size_t last = std::min(opts.batch_size, first + chunk);
    if (first >= last) break;
    threads.emplace_back(work, first, last);
  }
  for (auto& t : threads) t.join();
}

}  // namespace detail

template <class T>
void checkpoint_save(const std::string& path, const ModelConfig& cfg,
                     const ModelParams<T>& params,
                     const OptimizerState<T>& opt, const LossWeights& w,
                     std::uint64_t seed, std::uint64_t epochs_completed) {
  WeightsFileContent content;
  content.config = cfg;
  content.tensors = params_to_records(params);
  std::size_t i = 0;
  params.for_each([&](const std::string& name, const Tensor<T>&) {
    WeightsTensorRecord rec;
    rec.name = "opt_m." + name;
    rec.shape = opt.m[i].shape();
    for (T v : opt.m[i].data()) rec.data.push_back(static_cast<float>(v));
    content.tensors.push_back(std::move(rec));
    ++i;
  });
  i = 0;
  params.for_each([&](const std::string& name, const Tensor<T>&) {
    WeightsTensorRecord rec;
    rec.name = "opt_u." + name;
    rec.shape = opt.u[i].shape();
    for (T v : opt.u[i].data()) rec.data.push_back(static_cast<float>(v));
    content.tensors.push_back(std::move(rec));
    ++i;
  });
  TrainingSection ts;
  ts.optimizer_t = opt.t;
  ts.alpha = opt.alpha;
  ts.beta1 = opt.beta1;
  ts.beta2 = opt.beta2;
  ts.seed = seed;
  ts.epochs_completed = epochs_completed;
  ts.loss_a = w.a;
  ts.loss_b = w.b;
  ts.loss_c = w.c;
  content.training = ts;
  write_weights_file(path, content);
}

template <class T>
struct Checkpoint {
  ModelConfig config;
  ModelParams<T> params;
  OptimizerState<T> opt;
  LossWeights weights;
  std::uint64_t seed = 0;
  std::uint64_t epochs_completed = 0;
};

template <class T>
Checkpoint<T> checkpoint_load(const std::string& path) {
  WeightsFileContent content = read_weights_file(path);
  if (!content.training) {
    throw FormatError(FormatError::Kind::HeaderMismatch,
                      "file has no training section; not a checkpoint");
  }
  content.config.validate();
  Checkpoint<T> ck;
  ck.config = content.config;
  ck.params = params_from_records<T>(content.config, content.tensors);
  const auto layout = expected_param_layout(content.config);
  if (content.tensors.size() != 3 * layout.size()) {
    throw FormatError(FormatError::Kind::HeaderMismatch,
                      "checkpoint tensor count does not match its config");
  }
  auto read_block = [&](std::size_t base, const char* prefix,
                        std::vector<Tensor<T>>& dst) {
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto& rec = content.tensors[base + i];
      if (rec.name != std::string(prefix) + layout[i].first ||
          rec.shape != layout[i].second) {
        throw FormatError(FormatError::Kind::HeaderMismatch,
                          "unexpected checkpoint tensor '" + rec.name + "'");
      }
      std::vector<T> vals(rec.data.begin(), rec.data.end());
      dst.push_back(Tensor<T>::wrap(rec.shape, std::move(vals)));
    }
  };
  read_block(layout.size(), "opt_m.", ck.opt.m);
  read_block(2 * layout.size(), "opt_u.", ck.opt.u);
  const TrainingSection& ts = *content.training;
  ck.opt.t = ts.optimizer_t;
  ck.opt.alpha = ts.alpha;
  ck.opt.beta1 = ts.beta1;
  ck.opt.beta2 = ts.beta2;
  ck.weights = LossWeights{ts.loss_a, ts.loss_b, ts.loss_c};
  ck.seed = ts.seed;
  ck.epochs_completed = ts.epochs_completed;
  return ck;
}

// Trains with runtime synthesis: each batch element independently draws an
// EEG segment, a noise segment (EOG/EMG mixed 50/50 when both pools exist)
// and an SNR from U[snr_train_lo, snr_train_hi]. Resuming from a checkpoint
// continues the exact derived streams, so an interrupted run reproduces an
// uninterrupted one bit for bit in single-threaded mode.
template <class T>
TrainResult<T> train(const ModelConfig& cfg, const SegmentPools<T>& train_pool,
                     const SegmentPools<T>& test_pool,
                     const TrainOptions& opts,
                     std::optional<Checkpoint<T>> resume = std::nullopt) {
  cfg.validate();
  opts.weights.validate();
  train_pool.validate();
  test_pool.validate();
  if (opts.batch_size < 1 || opts.epochs < 1) {
    throw ConfigError("epochs and batch_size must be >= 1");
  }

  TrainResult<T> result;
  if (resume) {
    if (!(resume->config == cfg)) {
      throw ConfigError("checkpoint config does not match the requested one");
    }
    result.params = std::move(resume->params);
    result.opt = std::move(resume->opt);
    result.epochs_completed = resume->epochs_completed;
  } else {
    result.params = init_params<T>(cfg, opts.seed);
    result.opt = OptimizerState<T>::zeros_like(result.params);
    result.opt.alpha = opts.alpha;
    result.opt.beta1 = opts.beta1;
    result.opt.beta2 = opts.beta2;
  }

  const std::size_t steps_per_epoch =
      opts.steps_per_epoch > 0
          ? opts.steps_per_epoch
          : std::max<std::size_t>(1,
                                  train_pool.eeg.size() / opts.batch_size);

  std::vector<detail::ElementResult<T>> results;
  for (std::uint64_t epoch = result.epochs_completed + 1;
       epoch <= opts.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double loss_acc = 0.0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      detail::run_batch(cfg, result.params, train_pool, opts, epoch, step,
                        results);
      // ordered reduction: element index order, independent of thread count
      std::vector<Tensor<T>> grads;
      grads.reserve(results[0].grads.size());
      for (std::size_t p = 0; p < results[0].grads.size(); ++p) {
        std::vector<T> acc(results[0].grads[p].size(), T(0));
        for (std::size_t e = 0; e < results.size(); ++e) {
          const auto gd = results[e].grads[p].data();
          for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += gd[j];
        }
        const T inv = T(1) / static_cast<T>(results.size());
        for (auto& v : acc) v *= inv;
        grads.push_back(
            Tensor<T>::wrap(results[0].grads[p].shape(), std::move(acc)));
      }
      for (const auto& r : results) loss_acc += r.loss;
      adamax_step(result.params, grads, result.opt);
    }
    TrainRecord rec;
    rec.epoch = epoch;
    rec.train_loss =
        loss_acc / static_cast<double>(steps_per_epoch * opts.batch_size);
    rec.test_loss = detail::test_loss(cfg, result.params, test_pool, opts);
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    rec.param_checksum = param_checksum(result.params);
    result.history.push_back(rec);
    result.epochs_completed = epoch;
    if (opts.on_epoch) opts.on_epoch(rec);

    if (!opts.checkpoint_dir.empty() && opts.checkpoint_every > 0 &&
        epoch % opts.checkpoint_every == 0 && epoch != opts.epochs) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_epoch%04llu.ednw",
                    static_cast<unsigned long long>(epoch));
      checkpoint_save(opts.checkpoint_dir + "/" + name, cfg, result.params,
                      result.opt, opts.weights, opts.seed, epoch);
    }
  }
  if (!opts.checkpoint_dir.empty()) {
    checkpoint_save(opts.checkpoint_dir + "/checkpoint_final.ednw", cfg,
                    result.params, result.opt, opts.weights, opts.seed,
                    result.epochs_completed);
  }
  return result;
}

// Loss-history CSV: epoch,train_loss,test_loss,seconds
void write_history_csv(const std::string& path,
                       const std::vector<TrainRecord>& records,
                       bool append = false);

}  // namespace freqdenoise
