#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "freqdenoise/errors.hpp"
#include "freqdenoise/fft.hpp"
#include "freqdenoise/rng.hpp"
#include "freqdenoise/segment_file.hpp"
#include "freqdenoise/tensor.hpp"

namespace freqdenoise {

// SNR definition used when scaling noise into the mixture. The benchmark
// dataset defines SNR through the RMS ratio, SNR = 10*log10(RMS(x)/RMS(ln));
// the power-style 20*log10 variant is selectable for other corpora.
enum class SnrConvention { RmsDb10, RmsDb20 };

template <class T>
struct Segment {
  Tensor<T> samples;
  SegmentKind kind = SegmentKind::Eeg;
  std::string source_id;
};

// One synthesized example: y = x + lambda * n, with n the unit noise
// segment and lambda chosen so the mixture hits snr_db.
template <class T>
struct NoisyMixture {
  Tensor<T> x;
  Tensor<T> n;
  Tensor<T> y;
  T lambda = T(0);
  double snr_db = 0.0;
  SegmentKind artifact_kind = SegmentKind::Eog;
};

// All three signals shifted/scaled by the noisy signal's own statistics;
// the standardized noise is the scaled noise lambda*n that actually
// contaminates y.
template <class T>
struct StandardizedExample {
  Tensor<T> y_hat;
  Tensor<T> x_hat;
  Tensor<T> n_hat;
  double mean_y = 0.0;
  double std_y = 0.0;
};

template <class T>
struct ModelInputs {
  Tensor<T> noisy;      // [N]
  Tensor<T> psd_noise;  // [F]
  Tensor<T> psd_noisy;  // [F]
};

template <class T>
double mean_of(const Tensor<T>& t) {
  double acc = 0.0;
  for (T v : t.data()) acc += static_cast<double>(v);
  return acc / static_cast<double>(t.size());
}

// Population RMS / standard deviation (divide by N).
template <class T>
double rms(const Tensor<T>& t) {
  double acc = 0.0;
  for (T v : t.data()) {
    acc += static_cast<double>(v) * static_cast<double>(v);
  }
  return std::sqrt(acc / static_cast<double>(t.size()));
}

template <class T>
double stddev_of(const Tensor<T>& t) {
  const double mu = mean_of(t);
  double acc = 0.0;
  for (T v : t.data()) {
    const double d = static_cast<double>(v) - mu;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(t.size()));
}

// lambda such that 10*log10(RMS(x)/RMS(lambda*n)) == snr_db (RmsDb10), or
// the 20*log10 variant.
template <class T>
T snr_to_lambda(const Tensor<T>& x, const Tensor<T>& n, double snr_db,
                SnrConvention conv = SnrConvention::RmsDb10) {
  const double rx = rms(x);
  const double rn = rms(n);
  if (!(rx > 0.0)) throw DegenerateInputError("signal has zero energy");
  if (!(rn > 0.0)) throw DegenerateInputError("noise has zero energy");
  const double denom = conv == SnrConvention::RmsDb10 ? 10.0 : 20.0;
  return static_cast<T>((rx / rn) * std::pow(10.0, -snr_db / denom));
}

template <class T>
NoisyMixture<T> synthesize(const Segment<T>& x, const Segment<T>& n,
                           double snr_db,
                           SnrConvention conv = SnrConvention::RmsDb10) {
  if (x.kind != SegmentKind::Eeg) {
    throw DegenerateInputError("clean input must be an EEG segment");
  }
  if (n.kind != SegmentKind::Eog && n.kind != SegmentKind::Emg) {
    throw DegenerateInputError("noise input must be an EOG or EMG segment");
  }
  if (!x.samples.same_shape(n.samples)) {
    throw DimensionError("signal/noise segment length mismatch");
  }
  NoisyMixture<T> m;
  m.lambda = snr_to_lambda(x.samples, n.samples, snr_db, conv);
  m.x = x.samples;
  m.n = n.samples;
  m.snr_db = snr_db;
  m.artifact_kind = n.kind;
  std::vector<T> y(x.samples.size());
  const auto xs = x.samples.data();
  const auto ns = n.samples.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xs[i] + m.lambda * ns[i];
  m.y = Tensor<T>::wrap(x.samples.shape(), std::move(y));
  return m;
}

// Measured SNR of a mixture under the same convention; test/diagnostic aid.
template <class T>
double measured_snr_db(const Tensor<T>& x, const Tensor<T>& scaled_noise,
                       SnrConvention conv = SnrConvention::RmsDb10) {
  const double factor = conv == SnrConvention::RmsDb10 ? 10.0 : 20.0;
  return factor * std::log10(rms(x) / rms(scaled_noise));
}

template <class T>
StandardizedExample<T> standardize(const NoisyMixture<T>& m) {
  StandardizedExample<T> e;
  e.mean_y = mean_of(m.y);
  e.std_y = stddev_of(m.y);
  if (!(e.std_y > 0.0)) {
    throw DegenerateInputError("noisy signal has zero standard deviation");
  }
  const T mu = static_cast<T>(e.mean_y);
  const T inv = static_cast<T>(1.0 / e.std_y);
  const std::size_t len = m.y.size();
  std::vector<T> yh(len), xh(len), nh(len);
  const auto y = m.y.data();
  const auto x = m.x.data();
  const auto n = m.n.data();
  for (std::size_t i = 0; i < len; ++i) {
    yh[i] = (y[i] - mu) * inv;
    xh[i] = (x[i] - mu) * inv;
    nh[i] = (m.lambda * n[i] - mu) * inv;
  }
  e.y_hat = Tensor<T>::wrap(m.y.shape(), std::move(yh));
  e.x_hat = Tensor<T>::wrap(m.y.shape(), std::move(xh));
  e.n_hat = Tensor<T>::wrap(m.y.shape(), std::move(nh));
  return e;
}

// The PSDs the model consumes are computed from the standardized signals;
// the ratio channel is formed inside the forward pass.
template <class T>
ModelInputs<T> make_model_inputs(const StandardizedExample<T>& e) {
  return {e.y_hat, psd(e.n_hat), psd(e.y_hat)};
}

// Seeded-shuffle partition into train/test. Train takes floor(fraction*n)
// segments, matching the benchmark's published split sizes.
template <class T>
std::pair<std::vector<Segment<T>>, std::vector<Segment<T>>> split(
    const std::vector<Segment<T>>& segments, double train_fraction,
    std::uint64_t seed) {
  if (segments.empty()) throw EmptyDatasetError("cannot split an empty pool");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(segments.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix64 rng = derive_stream(seed, {stream_tag::kSplit});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.index(i)]);
  }
  const std::size_t train_count = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(segments.size())));
  std::pair<std::vector<Segment<T>>, std::vector<Segment<T>>> out;
  out.first.reserve(train_count);
  out.second.reserve(segments.size() - train_count);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < train_count ? out.first : out.second).push_back(segments[order[i]]);
  }
  return out;
}

enum class SegmentFileFormat { Ednb, Csv };

// ---- synthetic corpus ------------------------------------------------------

namespace detail {

template <class T>
void normalize_rms(std::vector<T>& v) {
  double acc = 0.0;
  for (T x : v) acc += static_cast<double>(x) * static_cast<double>(x);
  const double r = std::sqrt(acc / static_cast<double>(v.size()));
  if (r > 0.0) {
    const T s = static_cast<T>(1.0 / r);
    for (auto& x : v) x *= s;
  }
}

// Random-phase half-spectrum with amplitude shaping, inverse-transformed to
// a time signal. `amp(k)` returns the amplitude for bin k (0 disables it).
template <class T, class AmpFn>
std::vector<T> shaped_noise(std::size_t n, AmpFn amp, SplitMix64& rng) {
  const std::size_t f = n / 2 + 1;
  std::vector<T> re(f, T(0)), im(f, T(0));
  for (std::size_t k = 1; k + 1 < f; ++k) {
    const double a = amp(k);
    if (a == 0.0) continue;
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    re[k] = static_cast<T>(a * std::cos(phase));
    im[k] = static_cast<T>(a * std::sin(phase));
  }
  std::vector<T> out(n);
  freqdenoise::detail::irfft_rows(re.data(), im.data(), 1, f, out.data());
  return out;
}

}  // namespace detail

// Desk-scale stand-in for the benchmark corpus at a 256 Hz sampling rate:
//   EEG-like: 1/f-power random-phase spectrum band-limited to 1-80 Hz.
//   EOG-like: a few smooth low-frequency (0.5-3 Hz) positive bumps.
//   EMG-like: 25-120 Hz noise under a smooth burst envelope.
// All unit-RMS, deterministic per seed, ordered eeg/eog/emg.
template <class T>
std::vector<Segment<T>> generate_synthetic_corpus(std::size_t count_per_kind,
                                                  std::uint64_t seed,
                                                  std::size_t signal_length =
                                                      512) {
  if (count_per_kind < 1) {
    throw ConfigError("synthetic corpus count must be >= 1");
  }
  require_fft_length(signal_length);
  const double fs = 256.0;
  const std::size_t n = signal_length;
  const double bin_hz = fs / static_cast<double>(n);
  std::vector<Segment<T>> out;
  out.reserve(3 * count_per_kind);

  for (std::size_t i = 0; i < count_per_kind; ++i) {
    SplitMix64 rng = derive_stream(seed, {stream_tag::kSynth, 0, i});
    auto v = detail::shaped_noise<T>(
        n,
        [&](std::size_t k) {
          const double f_hz = static_cast<double>(k) * bin_hz;
          if (f_hz < 1.0 || f_hz > 80.0) return 0.0;
          return 1.0 / std::sqrt(f_hz);  // 1/f power
        },
        rng);
    detail::normalize_rms(v);
    out.push_back(Segment<T>{Tensor<T>::wrap({n}, std::move(v)),
                             SegmentKind::Eeg,
                             "synthetic/eeg/" + std::to_string(i)});
  }

  for (std::size_t i = 0; i < count_per_kind; ++i) {
    SplitMix64 rng = derive_stream(seed, {stream_tag::kSynth, 1, i});
    std::vector<T> v(n, T(0));
    const std::size_t bumps = 2 + rng.index(4);
    for (std::size_t b = 0; b < bumps; ++b) {
      const double f_hz = rng.uniform(0.5, 3.0);
      const double width_s = 2.0 / f_hz;  // two periods per bump
      const std::size_t width =
          std::min<std::size_t>(n, static_cast<std::size_t>(width_s * fs));
      const double amp = rng.uniform(0.5, 1.5) *
                         (rng.next_unit() < 0.9 ? 1.0 : -1.0);
      const std::size_t center = rng.index(n);
      for (std::size_t j = 0; j < width; ++j) {
        const std::ptrdiff_t t =
            static_cast<std::ptrdiff_t>(center + j) -
            static_cast<std::ptrdiff_t>(width / 2);
        if (t < 0 || t >= static_cast<std::ptrdiff_t>(n)) continue;
        const double hann =
            0.5 * (1.0 - std::cos(2.0 * std::numbers::pi *
                                  static_cast<double>(j) /
                                  static_cast<double>(width)));
        v[static_cast<std::size_t>(t)] += static_cast<T>(amp * hann);
      }
    }
    detail::normalize_rms(v);
    out.push_back(Segment<T>{Tensor<T>::wrap({n}, std::move(v)),
                             SegmentKind::Eog,
                             "synthetic/eog/" + std::to_string(i)});
  }

  for (std::size_t i = 0; i < count_per_kind; ++i) {
    SplitMix64 rng = derive_stream(seed, {stream_tag::kSynth, 2, i});
    auto v = detail::shaped_noise<T>(
        n,
        [&](std::size_t k) {
          const double f_hz = static_cast<double>(k) * bin_hz;
          if (f_hz < 25.0 || f_hz > 120.0) return 0.0;
          return 1.0;
        },
        rng);
    // smooth burst envelope, floor 0.25 so bursts never silence the noise
    const std::size_t bursts = 1 + rng.index(3);
    std::vector<double> env(n, 0.25);
    for (std::size_t b = 0; b < bursts; ++b) {
      const std::size_t width = n / 4 + rng.index(n / 2);
      const std::size_t center = rng.index(n);
      for (std::size_t j = 0; j < width; ++j) {
        const std::ptrdiff_t t =
            static_cast<std::ptrdiff_t>(center + j) -
            static_cast<std::ptrdiff_t>(width / 2);
        if (t < 0 || t >= static_cast<std::ptrdiff_t>(n)) continue;
        const double hann =
            0.5 * (1.0 - std::cos(2.0 * std::numbers::pi *
                                  static_cast<double>(j) /
                                  static_cast<double>(width)));
        env[static_cast<std::size_t>(t)] += hann;
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      v[j] *= static_cast<T>(env[j]);
    }
    detail::normalize_rms(v);
    out.push_back(Segment<T>{Tensor<T>::wrap({n}, std::move(v)),
                             SegmentKind::Emg,
                             "synthetic/emg/" + std::to_string(i)});
  }
  return out;
}

// ---- file adapters ---------------------------------------------------------

template <class T>
std::vector<Segment<T>> segments_from_rows(
    const std::vector<std::vector<double>>& rows, SegmentKind kind,
    const std::string& source) {
  std::vector<Segment<T>> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t len = rows[i].size();
    std::vector<T> v(len);
    for (std::size_t j = 0; j < len; ++j) {
      v[j] = static_cast<T>(rows[i][j]);
    }
    out.push_back(Segment<T>{Tensor<T>::wrap({len}, std::move(v)), kind,
                             source + "/" + std::to_string(i)});
  }
  return out;
}

// Loads a segment pool. EDNB carries its own kind code, which must agree
// with the expected kind; CSV has no kind column, so the caller's kind is
// authoritative there.
template <class T>
std::vector<Segment<T>> load_segments(const std::string& path,
                                      SegmentFileFormat format,
                                      SegmentKind kind) {
  if (format == SegmentFileFormat::Ednb) {
    EdnbContent content = read_ednb(path);
    if (content.kind != kind) {
      throw ConfigError("EDNB file " + path + " holds " +
                        to_string(content.kind) + " segments, expected " +
                        to_string(kind));
    }
    std::vector<Segment<T>> out;
    out.reserve(content.segments.size());
    for (std::size_t i = 0; i < content.segments.size(); ++i) {
      const auto& seg = content.segments[i];
      const std::size_t len = seg.size();
      std::vector<T> v(seg.begin(), seg.end());
      out.push_back(Segment<T>{Tensor<T>::wrap({len}, std::move(v)), kind,
                               path + "/" + std::to_string(i)});
    }
    return out;
  }
  return segments_from_rows<T>(read_csv_rows(path), kind, path);
}

template <class T>
void save_segments_ednb(const std::string& path,
                        const std::vector<Segment<T>>& segments,
                        SegmentKind kind) {
  EdnbContent content;
  content.kind = kind;
  content.segment_length =
      segments.empty() ? 0 : segments.front().samples.size();
  for (const auto& s : segments) {
    if (s.kind != kind) {
      throw ConfigError("segment pool mixes kinds on EDNB write");
    }
    std::vector<float> row;
    row.reserve(s.samples.size());
    for (T v : s.samples.data()) row.push_back(static_cast<float>(v));
    content.segments.push_back(std::move(row));
  }
  write_ednb(path, content);
}

}  // namespace freqdenoise
