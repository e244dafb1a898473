#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "freqdenoise/graph.hpp"
#include "freqdenoise/model_config.hpp"
#include "freqdenoise/rng.hpp"
#include "freqdenoise/weights_file.hpp"

namespace freqdenoise {

// Trainable state: per step, two symmetric stacks of frequency-axis
// convolutions (real/imaginary branch) plus one size-1 mixing convolution.
// Canonical order (steps ascending, re branch, im branch, mix; kernel then
// bias) is the contract shared by the optimizer, the weight file and the
// gradient collection.
template <class T>
struct ModelParams {
  struct BranchLayer {
    Tensor<T> kernel;  // [C_out, C_in, k]
    Tensor<T> bias;    // [C_out]
  };
  struct Step {
    std::vector<BranchLayer> real;
    std::vector<BranchLayer> imag;
    Tensor<T> mix_kernel;  // [c, c, 1]
    Tensor<T> mix_bias;    // [c]
  };
  std::vector<Step> steps;

  template <class F>
  void for_each(F&& fn) const {
    for (std::size_t s = 0; s < steps.size(); ++s) {
      const Step& st = steps[s];
      for (int branch = 0; branch < 2; ++branch) {
        const auto& layers = branch == 0 ? st.real : st.imag;
        const char* tag = branch == 0 ? "re" : "im";
        for (std::size_t l = 0; l < layers.size(); ++l) {
          fn(param_name(s, tag, l, "kernel"), layers[l].kernel);
          fn(param_name(s, tag, l, "bias"), layers[l].bias);
        }
      }
      fn("step" + std::to_string(s) + ".mix.kernel", st.mix_kernel);
      fn("step" + std::to_string(s) + ".mix.bias", st.mix_bias);
    }
  }

  template <class F>
  void for_each_mut(F&& fn) {
    for (std::size_t s = 0; s < steps.size(); ++s) {
      Step& st = steps[s];
      for (int branch = 0; branch < 2; ++branch) {
        auto& layers = branch == 0 ? st.real : st.imag;
        const char* tag = branch == 0 ? "re" : "im";
        for (std::size_t l = 0; l < layers.size(); ++l) {
          fn(param_name(s, tag, l, "kernel"), layers[l].kernel);
          fn(param_name(s, tag, l, "bias"), layers[l].bias);
        }
      }
      fn("step" + std::to_string(s) + ".mix.kernel", st.mix_kernel);
      fn("step" + std::to_string(s) + ".mix.bias", st.mix_bias);
    }
  }

  std::size_t count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Tensor<T>& t) { n += t.size(); });
    return n;
  }

  static std::string param_name(std::size_t step, const char* branch,
                                std::size_t layer, const char* leaf) {
    return "step" + std::to_string(step) + "." + branch + ".conv" +
           std::to_string(layer) + "." + leaf;
  }
};

// Channel count entering branch layer l (the spectrum triple has 3 rows).
inline std::size_t branch_in_channels(const ModelConfig& cfg, std::size_t l) {
  return l == 0 ? 3 : cfg.branch_hidden_channels;
}
inline std::size_t branch_out_channels(const ModelConfig& cfg, std::size_t s,
                                       std::size_t l) {
  return l + 1 == cfg.branch_layers ? cfg.step_filter_count(s)
                                    : cfg.branch_hidden_channels;
}

// Name/shape table in canonical order; single source of truth for
// initialization and for validating weight files.
inline std::vector<std::pair<std::string, std::vector<std::size_t>>>
expected_param_layout(const ModelConfig& cfg) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  const std::size_t k = cfg.branch_kernel_size;
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    const std::size_t c = cfg.step_filter_count(s);
    for (const char* tag : {"re", "im"}) {
      for (std::size_t l = 0; l < cfg.branch_layers; ++l) {
        const std::size_t cin = branch_in_channels(cfg, l);
        const std::size_t cout = branch_out_channels(cfg, s, l);
        out.emplace_back(ModelParams<float>::param_name(s, tag, l, "kernel"),
                         std::vector<std::size_t>{cout, cin, k});
        out.emplace_back(ModelParams<float>::param_name(s, tag, l, "bias"),
                         std::vector<std::size_t>{cout});
      }
    }
    out.emplace_back("step" + std::to_string(s) + ".mix.kernel",
                     std::vector<std::size_t>{c, c, 1});
    out.emplace_back("step" + std::to_string(s) + ".mix.bias",
                     std::vector<std::size_t>{c});
  }
  return out;
}

// Glorot-style uniform kernels (bound sqrt(6/(fan_in+fan_out)) with
// fan = channels * kernel length), zero biases. Deterministic per seed.
template <class T>
ModelParams<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SplitMix64 rng = derive_stream(seed, {stream_tag::kInit});
  auto draw_kernel = [&](std::size_t cout, std::size_t cin, std::size_t k) {
    const double bound =
        std::sqrt(6.0 / (static_cast<double>(cin * k) +
                         static_cast<double>(cout * k)));
    std::vector<T> v(cout * cin * k);
    for (auto& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
    return Tensor<T>::wrap({cout, cin, k}, std::move(v));
  };

  ModelParams<T> p;
  p.steps.resize(cfg.steps);
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    auto& st = p.steps[s];
    const std::size_t c = cfg.step_filter_count(s);
    for (int branch = 0; branch < 2; ++branch) {
      auto& layers = branch == 0 ? st.real : st.imag;
      layers.resize(cfg.branch_layers);
      for (std::size_t l = 0; l < cfg.branch_layers; ++l) {
        const std::size_t cin = branch_in_channels(cfg, l);
        const std::size_t cout = branch_out_channels(cfg, s, l);
        layers[l].kernel = draw_kernel(cout, cin, cfg.branch_kernel_size);
        layers[l].bias = Tensor<T>::zeros({cout});
      }
    }
    st.mix_kernel = draw_kernel(c, c, 1);
    st.mix_bias = Tensor<T>::zeros({c});
  }
  return p;
}

// Parameter leaves registered on a graph, mirroring ModelParams. `ordered`
// matches the canonical traversal and is what gradient collection and the
// optimizer iterate over.
template <class T>
struct ParamVars {
  struct Step {
    std::vector<std::pair<Var<T>, Var<T>>> real;  // (kernel, bias)
    std::vector<std::pair<Var<T>, Var<T>>> imag;
    Var<T> mix_kernel;
    Var<T> mix_bias;
  };
  std::vector<Step> steps;
  std::vector<Var<T>> ordered;
};

template <class T>
ParamVars<T> bind_params(Graph<T>& g, const ModelParams<T>& p) {
  ParamVars<T> vars;
  vars.steps.resize(p.steps.size());
  for (std::size_t s = 0; s < p.steps.size(); ++s) {
    const auto& st = p.steps[s];
    auto& vs = vars.steps[s];
    for (int branch = 0; branch < 2; ++branch) {
      const auto& layers = branch == 0 ? st.real : st.imag;
      auto& vlayers = branch == 0 ? vs.real : vs.imag;
      for (const auto& layer : layers) {
        Var<T> wk = g.leaf(layer.kernel);
        Var<T> wb = g.leaf(layer.bias);
        vlayers.emplace_back(wk, wb);
        vars.ordered.push_back(wk);
        vars.ordered.push_back(wb);
      }
    }
    vs.mix_kernel = g.leaf(st.mix_kernel);
    vs.mix_bias = g.leaf(st.mix_bias);
    vars.ordered.push_back(vs.mix_kernel);
    vars.ordered.push_back(vs.mix_bias);
  }
  return vars;
}

// Builds the spectrum triple [3, F]: PSD of the scaled noise, PSD of the
// noisy signal, and their ratio guarded by epsilon. Row order is part of
// the model contract.
template <class T>
Var<T> make_spectrum_triple(Graph<T>& g, Var<T> psd_noise, Var<T> psd_noisy,
                            T epsilon_ratio) {
  Var<T> ratio = g.elementwise(psd_noisy, psd_noise, EwKind::DivEps,
                               epsilon_ratio);
  const std::size_t f = g.value(psd_noise).size();
  Var<T> rows[3] = {g.reshape(psd_noise, {1, f}), g.reshape(psd_noisy, {1, f}),
                    g.reshape(ratio, {1, f})};
  return g.concat_channels(std::span<const Var<T>>(rows, 3));
}

// One kernel-evaluator block: two tanh-activated convolution stacks over
// the frequency axis estimate the real and imaginary half-spectra of
// C_out*C_in filters, an inverse real FFT moves them to the time domain,
// and a size-1 convolution mixes the filter channels before the final tanh
// bounds every tap to [-1, 1]. Output [C_out, C_in, N].
template <class T>
Var<T> kernel_evaluator(Graph<T>& g, const ModelConfig& cfg, std::size_t step,
                        Var<T> spectra,
                        const typename ParamVars<T>::Step& sp) {
  const Tensor<T>& sv = g.value(spectra);
  if (sv.rank() != 2 || sv.dim(0) != 3 || sv.dim(1) != cfg.frequency_bins()) {
    throw DimensionError("kernel_evaluator expects spectra [3, N/2+1]");
  }
  auto run_branch = [&](const std::vector<std::pair<Var<T>, Var<T>>>& layers) {
    Var<T> h = spectra;
    for (const auto& [kernel, bias] : layers) {
      h = g.tanh_act(g.bias_add(g.conv1d_same(h, kernel), bias));
    }
    return h;
  };
  Var<T> re = run_branch(sp.real);
  Var<T> im = run_branch(sp.imag);
  Var<T> filters = g.irfft(re, im);  // [c, N]
  Var<T> mixed = g.bias_add(g.conv1d_same(filters, sp.mix_kernel),
                            sp.mix_bias);
  Var<T> bank = g.tanh_act(mixed);
  const std::size_t c_out = cfg.channel_progression[step + 1];
  const std::size_t c_in = cfg.channel_progression[step];
  return g.reshape(bank, {c_out, c_in, cfg.signal_length});
}

// Applies the evaluated filter banks in cascade: ELU between steps, no
// activation after the last convolution.
template <class T>
Var<T> filters_applier(Graph<T>& g, Var<T> noisy,
                       std::span<const Var<T>> banks) {
  if (banks.empty()) throw DimensionError("filters_applier needs >= 1 bank");
  Var<T> h = noisy;
  for (std::size_t s = 0; s + 1 < banks.size(); ++s) {
    h = g.elu_act(g.conv1d_same(h, banks[s]));
  }
  return g.conv1d_same(h, banks.back());
}

template <class T>
struct ForwardVars {
  Var<T> output;                // [N], standardized domain
  Var<T> spectra;               // [3, F]
  std::vector<Var<T>> banks;    // per step, [C_out, C_in, N]
};

// Full forward pass from standardized inputs to the denoised standardized
// signal.
template <class T>
ForwardVars<T> model_forward_detailed(Graph<T>& g, const ModelConfig& cfg,
                                      Var<T> noisy_std, Var<T> psd_noise,
                                      Var<T> psd_noisy,
                                      const ParamVars<T>& params) {
  const std::size_t n = cfg.signal_length;
  const std::size_t f = cfg.frequency_bins();
  if (g.value(noisy_std).size() != n) {
    throw DimensionError("noisy signal length does not match config");
  }
  if (g.value(psd_noise).size() != f || g.value(psd_noisy).size() != f) {
    throw DimensionError("PSD length does not match config");
  }
  if (params.steps.size() != cfg.steps) {
    throw DimensionError("parameter steps do not match config");
  }
  ForwardVars<T> fv;
  fv.spectra = make_spectrum_triple(g, psd_noise, psd_noisy,
                                    static_cast<T>(cfg.epsilon_ratio));
  fv.banks.reserve(cfg.steps);
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    fv.banks.push_back(
        kernel_evaluator(g, cfg, s, fv.spectra, params.steps[s]));
  }
  Var<T> h = g.reshape(noisy_std, {std::size_t(1), n});
  Var<T> out = filters_applier(
      g, h, std::span<const Var<T>>(fv.banks.data(), fv.banks.size()));
  fv.output = g.reshape(out, {n});
  return fv;
}

template <class T>
Var<T> model_forward(Graph<T>& g, const ModelConfig& cfg, Var<T> noisy_std,
                     Var<T> psd_noise, Var<T> psd_noisy,
                     const ParamVars<T>& params) {
  return model_forward_detailed(g, cfg, noisy_std, psd_noise, psd_noisy,
                                params)
      .output;
}

// Eager convenience wrapper: one standardized signal in, one out.
template <class T>
Tensor<T> denoise(const ModelConfig& cfg, const ModelParams<T>& params,
                  const Tensor<T>& noisy_std, const Tensor<T>& psd_noise,
                  const Tensor<T>& psd_noisy,
                  ConvPolicy policy = ConvPolicy::Direct) {
  Graph<T> g(policy);
  ParamVars<T> pv = bind_params(g, params);
  Var<T> out = model_forward(g, cfg, g.leaf(noisy_std), g.leaf(psd_noise),
                             g.leaf(psd_noisy), pv);
  return g.value(out);
}

// ---- weight file adapters ------------------------------------------------

template <class T>
std::vector<WeightsTensorRecord> params_to_records(const ModelParams<T>& p) {
  std::vector<WeightsTensorRecord> recs;
  p.for_each([&](const std::string& name, const Tensor<T>& t) {
    WeightsTensorRecord rec;
    rec.name = name;
    rec.shape = t.shape();
    rec.data.reserve(t.size());
    for (T v : t.data()) rec.data.push_back(static_cast<float>(v));
    recs.push_back(std::move(rec));
  });
  return recs;
}

// Reconstructs params from the leading records of a weight/checkpoint file,
// validating names and shapes against the config-derived layout.
template <class T>
ModelParams<T> params_from_records(const ModelConfig& cfg,
                                   const std::vector<WeightsTensorRecord>& recs) {
  const auto layout = expected_param_layout(cfg);
  if (recs.size() < layout.size()) {
    throw FormatError(FormatError::Kind::HeaderMismatch,
                      "weight file holds fewer tensors than the config needs");
  }
  ModelParams<T> p = init_params<T>(cfg, 0);  // shapes only; overwritten below
  std::size_t i = 0;
  p.for_each_mut([&](const std::string& name, Tensor<T>& t) {
    const auto& rec = recs[i];
    if (rec.name != layout[i].first || rec.name != name ||
        rec.shape != layout[i].second) {
      throw FormatError(FormatError::Kind::HeaderMismatch,
                        "tensor " + std::to_string(i) + " is '" + rec.name +
                            "', expected '" + layout[i].first + "'");
    }
    std::vector<T> vals;
    vals.reserve(rec.data.size());
    for (float v : rec.data) vals.push_back(static_cast<T>(v));
    t = Tensor<T>::wrap(rec.shape, std::move(vals));
    ++i;
  });
  return p;
}

template <class T>
void save_weights(const std::string& path, const ModelConfig& cfg,
                  const ModelParams<T>& params) {
  WeightsFileContent content;
  content.config = cfg;
  content.tensors = params_to_records(params);
  write_weights_file(path, content);
}

template <class T>
std::pair<ModelConfig, ModelParams<T>> load_weights(const std::string& path) {
  WeightsFileContent content = read_weights_file(path);
  content.config.validate();
  const auto layout = expected_param_layout(content.config);
  if (!content.training && content.tensors.size() != layout.size()) {
    throw FormatError(FormatError::Kind::HeaderMismatch,
                      "weight file tensor count does not match its config");
  }
  return {content.config,
          params_from_records<T>(content.config, content.tensors)};
}

}  // namespace freqdenoise
