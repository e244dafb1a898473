#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <vector>

#include "freqdenoise/errors.hpp"
#include "freqdenoise/tensor.hpp"

namespace freqdenoise {

// Half-spectrum of a real signal of even length N: F = N/2 + 1 bins.
// Conventions, fixed project-wide:
//   forward   X[k] = sum_n x[n] * exp(-i 2*pi*k*n / N)   (unnormalized)
//   inverse   x[n] = (1/N) * sum_k X[k] * exp(+i 2*pi*k*n / N)
// assemble_halfspectrum() and irfft() force the imaginary parts of bins 0
// and F-1 to zero so the inverse is exactly real.
template <class T>
struct ComplexSpectrum {
  Tensor<T> re;
  Tensor<T> im;
  std::size_t bins() const { return re.size(); }
};

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void require_fft_length(std::size_t n) {
  if (n < 4 || !is_pow2(n)) {
    throw UnsupportedLengthError(
        "transform length must be a power of two >= 4, got " +
        std::to_string(n));
  }
}

namespace detail {

template <class T>
struct TwiddleTable {
  std::vector<T> cos_v;  // cos(-2*pi*j/n), j < n/2
  std::vector<T> sin_v;  // sin(-2*pi*j/n)
};

template <class T>
const TwiddleTable<T>& twiddles(std::size_t n) {
  thread_local std::map<std::size_t, TwiddleTable<T>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  TwiddleTable<T> t;
  t.cos_v.resize(n / 2);
  t.sin_v.resize(n / 2);
  for (std::size_t j = 0; j < n / 2; ++j) {
    double a = -2.0 * std::numbers::pi * static_cast<double>(j) /
               static_cast<double>(n);
    t.cos_v[j] = static_cast<T>(std::cos(a));
    t.sin_v[j] = static_cast<T>(std::sin(a));
  }
  return cache.emplace(n, std::move(t)).first->second;
}

// In-place iterative radix-2 transform on split re/im buffers of
// power-of-two length. inverse=true applies exp(+i...) and NO 1/N scaling;
// callers scale where their convention requires it.
template <class T>
void fft_pow2(std::size_t n, T* re, T* im, bool inverse) {
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  const TwiddleTable<T>& tw = twiddles<T>(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    std::size_t half = len >> 1;
    std::size_t step = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        T wr = tw.cos_v[j * step];
        T wi = tw.sin_v[j * step];
        if (inverse) wi = -wi;
        std::size_t a = i + j;
        std::size_t b = a + half;
        T tr = re[b] * wr - im[b] * wi;
        T ti = re[b] * wi + im[b] * wr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
      }
    }
  }
}

// Forward half-spectrum of `rows` packed real rows of length n.
template <class T>
void rfft_rows(const T* x, std::size_t rows, std::size_t n, T* re_out,
               T* im_out) {
  require_fft_length(n);
  const std::size_t f = n / 2 + 1;
  std::vector<T> re(n), im(n);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = x + r * n;
    std::copy(row, row + n, re.begin());
    std::fill(im.begin(), im.end(), T(0));
    fft_pow2(n, re.data(), im.data(), false);
    std::copy(re.begin(), re.begin() + f, re_out + r * f);
    std::copy(im.begin(), im.begin() + f, im_out + r * f);
  }
}

// Inverse of the half-spectrum map: conjugate-symmetric extension with the
// boundary imaginary bins forced to zero, then (1/N)-scaled inverse.
template <class T>
void irfft_rows(const T* re_in, const T* im_in, std::size_t rows,
                std::size_t f, T* out) {
  if (f < 3) throw DimensionError("half-spectrum needs at least 3 bins");
  const std::size_t n = 2 * (f - 1);
  require_fft_length(n);
  std::vector<T> re(n), im(n);
  const T inv_n = T(1) / static_cast<T>(n);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* rre = re_in + r * f;
    const T* rim = im_in + r * f;
    re[0] = rre[0];
    im[0] = T(0);
    re[n / 2] = rre[f - 1];
    im[n / 2] = T(0);
    for (std::size_t k = 1; k + 1 < f; ++k) {
      re[k] = rre[k];
      im[k] = rim[k];
      re[n - k] = rre[k];
      im[n - k] = -rim[k];
    }
    fft_pow2(n, re.data(), im.data(), true);
    T* orow = out + r * n;
    for (std::size_t i = 0; i < n; ++i) orow[i] = re[i] * inv_n;
  }
}

// Adjoint of the (real-linear) forward half-spectrum map:
//   out[n] = sum_k gre[k]*cos(2*pi*k*n/N) - gim[k]*sin(2*pi*k*n/N).
// Equals the real part of the unnormalized inverse transform of the
// zero-padded gradient spectrum. Used by the rfft/psd backward passes.
template <class T>
void rfft_adjoint_rows(const T* gre, const T* gim, std::size_t rows,
                       std::size_t f, T* out) {
  if (f < 3) throw DimensionError("half-spectrum needs at least 3 bins");
  const std::size_t n = 2 * (f - 1);
  require_fft_length(n);
  std::vector<T> re(n), im(n);
  for (std::size_t r = 0; r < rows; ++r) {
    std::fill(re.begin(), re.end(), T(0));
    std::fill(im.begin(), im.end(), T(0));
    const T* rre = gre + r * f;
    const T* rim = gim + r * f;
    for (std::size_t k = 0; k < f; ++k) {
      re[k] = rre[k];
      im[k] = rim[k];
    }
    fft_pow2(n, re.data(), im.data(), true);
    std::copy(re.begin(), re.end(), out + r * n);
  }
}

template <class T>
void psd_rows(const T* x, std::size_t rows, std::size_t n, T* out) {
  const std::size_t f = n / 2 + 1;
  std::vector<T> re(rows * f), im(rows * f);
  rfft_rows(x, rows, n, re.data(), im.data());
  const T inv_n = T(1) / static_cast<T>(n);
  for (std::size_t i = 0; i < rows * f; ++i) {
    out[i] = (re[i] * re[i] + im[i] * im[i]) * inv_n;
  }
}

}  // namespace detail

// -------------------------------------------------------------------------
// Eager single-signal entry points (rank-1 tensors).
// -------------------------------------------------------------------------

template <class T>
ComplexSpectrum<T> rfft(const Tensor<T>& x) {
  if (x.rank() != 1) throw DimensionError("rfft expects a rank-1 tensor");
  const std::size_t n = x.size();
  require_fft_length(n);
  const std::size_t f = n / 2 + 1;
  std::vector<T> re(f), im(f);
  detail::rfft_rows(x.raw(), 1, n, re.data(), im.data());
  return {Tensor<T>::wrap({f}, std::move(re)), Tensor<T>::wrap({f}, std::move(im))};
}

// Pairs a real and an imaginary half-spectrum, zeroing the boundary
// imaginary bins that conjugate symmetry forces.
template <class T>
ComplexSpectrum<T> assemble_halfspectrum(const Tensor<T>& re,
                                         const Tensor<T>& im) {
  if (re.rank() != 1 || im.rank() != 1 || re.size() != im.size()) {
    throw DimensionError("spectrum halves must be rank-1 of equal length");
  }
  const std::size_t f = re.size();
  if (f < 3) throw DimensionError("half-spectrum needs at least 3 bins");
  std::vector<T> im_fixed(im.data().begin(), im.data().end());
  im_fixed[0] = T(0);
  im_fixed[f - 1] = T(0);
  return {re, Tensor<T>::wrap({f}, std::move(im_fixed))};
}

template <class T>
Tensor<T> irfft(const ComplexSpectrum<T>& s) {
  const std::size_t f = s.bins();
  if (f < 3) throw DimensionError("half-spectrum needs at least 3 bins");
  const std::size_t n = 2 * (f - 1);
  std::vector<T> out(n);
  detail::irfft_rows(s.re.raw(), s.im.raw(), 1, f, out.data());
  return Tensor<T>::wrap({n}, std::move(out));
}

// One-sided rectangular-window periodogram, S[k] = |X[k]|^2 / N, no bin
// doubling. This is the single PSD estimator used across the project.
// With hann=true the segment is Hann-windowed first (off by default).
template <class T>
Tensor<T> psd(const Tensor<T>& x, bool hann = false) {
  if (x.rank() != 1) throw DimensionError("psd expects a rank-1 tensor");
  const std::size_t n = x.size();
  require_fft_length(n);
  const std::size_t f = n / 2 + 1;
  std::vector<T> out(f);
  if (!hann) {
    detail::psd_rows(x.raw(), 1, n, out.data());
  } else {
    std::vector<T> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      double c = std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                          static_cast<double>(n));
      w[i] = x.at(i) * static_cast<T>(0.5 * (1.0 - c));
    }
    detail::psd_rows(w.data(), 1, n, out.data());
  }
  return Tensor<T>::wrap({f}, std::move(out));
}

}  // namespace freqdenoise
