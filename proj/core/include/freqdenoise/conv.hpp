#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "freqdenoise/fft.hpp"

namespace freqdenoise {

// How conv1d_same is evaluated. Direct summation is the default and the
// reference; the FFT path is an optional speedup for long kernels and must
// agree with Direct within 1e-5 relative.
enum class ConvPolicy { Direct, Fft };

namespace detail {

// Same-size 1D cross-correlation (no kernel flip):
//   out[co][t] = sum_{ci,j} in[ci][t + j - off] * ker[co][ci][j]
// with off = (k-1)/2 (floor) and out-of-range input read as zero.
// in: [cin, n], ker: [cout, cin, k], out: [cout, n].
template <class T>
void conv1d_same_direct(const T* in, std::size_t cin, std::size_t n,
                        const T* ker, std::size_t cout, std::size_t k,
                        T* out) {
  const std::ptrdiff_t off = static_cast<std::ptrdiff_t>((k - 1) / 2);
  const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
  std::fill(out, out + cout * n, T(0));
  for (std::size_t co = 0; co < cout; ++co) {
    T* orow = out + co * n;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const T* irow = in + ci * n;
      const T* krow = ker + (co * cin + ci) * k;
      for (std::size_t j = 0; j < k; ++j) {
        const T w = krow[j];
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - off;
        const std::ptrdiff_t t0 = shift < 0 ? -shift : 0;
        const std::ptrdiff_t t1 = shift > 0 ? sn - shift : sn;
        const T* ip = irow + shift;
        for (std::ptrdiff_t t = t0; t < t1; ++t) orow[t] += w * ip[t];
      }
    }
  }
}

// d(in) for the same correlation:
//   gin[ci][u] = sum_{co,j} ker[co][ci][j] * gout[co][u + off - j]
template <class T>
void conv1d_same_grad_input(const T* gout, const T* ker, std::size_t cin,
                            std::size_t n, std::size_t cout, std::size_t k,
                            T* gin) {
  const std::ptrdiff_t off = static_cast<std::ptrdiff_t>((k - 1) / 2);
  const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
  std::fill(gin, gin + cin * n, T(0));
  for (std::size_t co = 0; co < cout; ++co) {
    const T* grow = gout + co * n;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      T* orow = gin + ci * n;
      const T* krow = ker + (co * cin + ci) * k;
      for (std::size_t j = 0; j < k; ++j) {
        const T w = krow[j];
        const std::ptrdiff_t shift = off - static_cast<std::ptrdiff_t>(j);
        const std::ptrdiff_t t0 = shift < 0 ? -shift : 0;
        const std::ptrdiff_t t1 = shift > 0 ? sn - shift : sn;
        const T* gp = grow + shift;
        for (std::ptrdiff_t t = t0; t < t1; ++t) orow[t] += w * gp[t];
      }
    }
  }
}

// d(ker):
//   gker[co][ci][j] = sum_t gout[co][t] * in[ci][t + j - off]
template <class T>
void conv1d_same_grad_kernels(const T* gout, const T* in, std::size_t cin,
                              std::size_t n, std::size_t cout, std::size_t k,
                              T* gker) {
  const std::ptrdiff_t off = static_cast<std::ptrdiff_t>((k - 1) / 2);
  const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
  for (std::size_t co = 0; co < cout; ++co) {
    const T* grow = gout + co * n;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const T* irow = in + ci * n;
      T* krow = gker + (co * cin + ci) * k;
      for (std::size_t j = 0; j < k; ++j) {
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - off;
        const std::ptrdiff_t t0 = shift < 0 ? -shift : 0;
        const std::ptrdiff_t t1 = shift > 0 ? sn - shift : sn;
        const T* ip = irow + shift;
        T acc = T(0);
        for (std::ptrdiff_t t = t0; t < t1; ++t) acc += grow[t] * ip[t];
        krow[j] = acc;
      }
    }
  }
}

// ---- FFT fast path -------------------------------------------------------
//
// Correlation theorem: with A = FFT(a_padded) and B = FFT(b_padded) at a
// common power-of-two length M >= n + k - 1,
//   xcorr(a, b)[u] = IFFT(A * conj(B))[u mod M],  u in [-(k-1), n-1].
// Channel sums are accumulated in the frequency domain, so each output row
// costs one inverse transform.

struct FftConvPlan {
  std::size_t m = 0;  // padded transform length
};

inline std::size_t padded_length(std::size_t n, std::size_t k) {
  std::size_t need = n + k - 1;
  std::size_t m = 4;
  while (m < need) m <<= 1;
  return m;
}

template <class T>
void conv1d_same_fft(const T* in, std::size_t cin, std::size_t n,
                     const T* ker, std::size_t cout, std::size_t k, T* out) {
  const std::size_t m = padded_length(n, k);
  const std::ptrdiff_t off = static_cast<std::ptrdiff_t>((k - 1) / 2);
  // FFTs of all input rows and kernel rows, reused across channel pairs.
  std::vector<T> ire(cin * m), iim(cin * m, T(0));
  for (std::size_t ci = 0; ci < cin; ++ci) {
    std::fill(ire.begin() + ci * m, ire.begin() + (ci + 1) * m, T(0));
    std::copy(in + ci * n, in + (ci + 1) * n, ire.begin() + ci * m);
    fft_pow2(m, ire.data() + ci * m, iim.data() + ci * m, false);
  }
  std::vector<T> kre(cout * cin * m), kim(cout * cin * m, T(0));
  for (std::size_t p = 0; p < cout * cin; ++p) {
    std::fill(kre.begin() + p * m, kre.begin() + (p + 1) * m, T(0));
    std::copy(ker + p * k, ker + p * k + k, kre.begin() + p * m);
    fft_pow2(m, kre.data() + p * m, kim.data() + p * m, false);
  }
  std::vector<T> are(m), aim(m);
  for (std::size_t co = 0; co < cout; ++co) {
    std::fill(are.begin(), are.end(), T(0));
    std::fill(aim.begin(), aim.end(), T(0));
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const T* xr = ire.data() + ci * m;
      const T* xi = iim.data() + ci * m;
      const T* yr = kre.data() + (co * cin + ci) * m;
      const T* yi = kim.data() + (co * cin + ci) * m;
      for (std::size_t q = 0; q < m; ++q) {
        // X * conj(Y)
        are[q] += xr[q] * yr[q] + xi[q] * yi[q];
        aim[q] += xi[q] * yr[q] - xr[q] * yi[q];
      }
    }
    fft_pow2(m, are.data(), aim.data(), true);
    const T inv_m = T(1) / static_cast<T>(m);
    T* orow = out + co * n;
    for (std::size_t t = 0; t < n; ++t) {
      std::ptrdiff_t u = static_cast<std::ptrdiff_t>(t) - off;
      std::size_t idx = u >= 0 ? static_cast<std::size_t>(u)
                               : m - static_cast<std::size_t>(-u);
      orow[t] = are[idx] * inv_m;
    }
  }
}

template <class T>
void conv1d_same(const T* in, std::size_t cin, std::size_t n, const T* ker,
                 std::size_t cout, std::size_t k, T* out, ConvPolicy policy) {
  if (policy == ConvPolicy::Fft) {
    conv1d_same_fft(in, cin, n, ker, cout, k, out);
  } else {
    conv1d_same_direct(in, cin, n, ker, cout, k, out);
  }
}

}  // namespace detail
}  // namespace freqdenoise
