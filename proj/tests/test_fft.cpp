#include <cmath>
#include <vector>

#include "doctest.h"
#include "freqdenoise/fft.hpp"
#include "oracles.hpp"

using namespace freqdenoise;

namespace {

Tensor<double> vec(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor<double>::wrap({n}, std::move(v));
}

double max_abs_diff(std::span<const double> a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace

TEST_SUITE("fft") {

TEST_CASE("rfft of a constant signal is DC-only") {
  auto s = rfft(vec({1, 1, 1, 1}));
  CHECK(s.bins() == 3);
  CHECK(s.re.at(0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(s.re.at(1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(s.re.at(2) == doctest::Approx(0.0).epsilon(1e-14));
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(std::abs(s.im.at(k)) < 1e-13);
  }
}

TEST_CASE("rfft matches the direct-summation DFT oracle") {
  SUBCASE("alternating fixture") {
    std::vector<double> x{1, 0, -1, 0};
    std::vector<double> ore, oim;
    oracle::dft_halfspectrum(x, ore, oim);
    CHECK(ore[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ore[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ore[2] == doctest::Approx(0.0).epsilon(1e-12));
    auto s = rfft(vec(x));
    CHECK(max_abs_diff(s.re.data(), ore) < 1e-12);
    CHECK(max_abs_diff(s.im.data(), oim) < 1e-12);
  }
  SUBCASE("random signals") {
    for (std::size_t n : {8u, 64u, 512u}) {
      auto x = oracle::random_vector(n, 42 + n);
      std::vector<double> ore, oim;
      oracle::dft_halfspectrum(x, ore, oim);
      auto s = rfft(vec(x));
      CHECK(max_abs_diff(s.re.data(), ore) < 1e-9);
      CHECK(max_abs_diff(s.im.data(), oim) < 1e-9);
    }
  }
}

TEST_CASE("rfft is linear") {
  for (int i = 0; i < 5; ++i) {
    auto a = oracle::random_vector(64, 100 + i);
    auto b = oracle::random_vector(64, 200 + i);
    std::vector<double> sum(64);
    for (std::size_t j = 0; j < 64; ++j) sum[j] = a[j] + b[j];
    auto sa = rfft(vec(a));
    auto sb = rfft(vec(b));
    auto ss = rfft(vec(sum));
    for (std::size_t k = 0; k < ss.bins(); ++k) {
      CHECK(ss.re.at(k) ==
            doctest::Approx(sa.re.at(k) + sb.re.at(k)).epsilon(1e-10));
      CHECK(ss.im.at(k) ==
            doctest::Approx(sa.im.at(k) + sb.im.at(k)).epsilon(1e-10));
    }
  }
}

TEST_CASE("irfft fixtures") {
  SUBCASE("constant") {
    auto x = irfft(ComplexSpectrum<double>{vec({4, 0, 0}), vec({0, 0, 0})});
    REQUIRE(x.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(x.at(i) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  SUBCASE("single tone against the IDFT oracle") {
    std::vector<double> re{0, 2, 0}, im{0, 0, 0};
    auto expect = oracle::idft_from_halfspectrum(re, im);
    CHECK(expect[0] == doctest::Approx(1.0));
    CHECK(expect[2] == doctest::Approx(-1.0));
    auto x = irfft(ComplexSpectrum<double>{vec(re), vec(im)});
    CHECK(max_abs_diff(x.data(), expect) < 1e-12);
  }
}

TEST_CASE("irfft(rfft(x)) round trip within 1e-10") {
  for (std::size_t n : {8u, 64u, 512u}) {
    auto x = oracle::random_vector(n, 7 * n + 1);
    auto back = irfft(rfft(vec(x)));
    REQUIRE(back.size() == n);
    CHECK(max_abs_diff(back.data(), x) < 1e-10);
  }
}

TEST_CASE("Parseval within 1e-9 relative") {
  for (std::size_t n : {8u, 64u, 512u}) {
    auto x = oracle::random_vector(n, 9000 + n);
    double time_energy = 0.0;
    for (double v : x) time_energy += v * v;
    auto s = rfft(vec(x));
    const std::size_t f = s.bins();
    double spec_energy =
        s.re.at(0) * s.re.at(0) + s.re.at(f - 1) * s.re.at(f - 1);
    for (std::size_t k = 1; k + 1 < f; ++k) {
      spec_energy +=
          2.0 * (s.re.at(k) * s.re.at(k) + s.im.at(k) * s.im.at(k));
    }
    spec_energy /= static_cast<double>(n);
    CHECK(std::abs(spec_energy - time_energy) / time_energy < 1e-9);
  }
}

TEST_CASE("psd fixtures and properties") {
  SUBCASE("constant signal") {
    auto s = psd(vec({1, 1, 1, 1}));
    REQUIRE(s.size() == 3);
    CHECK(s.at(0) == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(s.at(1) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(s.at(2) == doctest::Approx(0.0).epsilon(1e-13));
  }
  SUBCASE("alternating signal against the DFT oracle") {
    std::vector<double> x{1, 0, -1, 0};
    auto expect = oracle::periodogram(x);
    CHECK(expect[1] == doctest::Approx(1.0));
    auto s = psd(vec(x));
    CHECK(max_abs_diff(s.data(), expect) < 1e-12);
  }
  SUBCASE("quadratic homogeneity and nonnegativity") {
    auto x = oracle::random_vector(64, 31);
    std::vector<double> scaled(64);
    const double c = 3.25;
    for (std::size_t i = 0; i < 64; ++i) scaled[i] = c * x[i];
    auto s1 = psd(vec(x));
    auto s2 = psd(vec(scaled));
    for (std::size_t k = 0; k < s1.size(); ++k) {
      CHECK(s1.at(k) >= 0.0);
      CHECK(s2.at(k) == doctest::Approx(c * c * s1.at(k)).epsilon(1e-9));
    }
  }
  SUBCASE("hann window variant stays nonnegative") {
    auto s = psd(vec(oracle::random_vector(64, 77)), true);
    for (std::size_t k = 0; k < s.size(); ++k) CHECK(s.at(k) >= 0.0);
  }
}

TEST_CASE("unsupported lengths are rejected") {
  CHECK_THROWS_AS(rfft(vec({1, 2, 3})), UnsupportedLengthError);      // odd
  CHECK_THROWS_AS(rfft(vec({1, 2, 3, 4, 5, 6})), UnsupportedLengthError);
  CHECK_THROWS_AS(rfft(vec({1, 2})), UnsupportedLengthError);
  CHECK_THROWS_AS(psd(vec({1, 2, 3, 4, 5, 6})), UnsupportedLengthError);
}

TEST_CASE("irfft length rule") {
  // 6 bins -> N = 10, not a power of two
  std::vector<double> six(6, 0.0);
  CHECK_THROWS_AS(irfft(ComplexSpectrum<double>{vec(six), vec(six)}),
                  UnsupportedLengthError);
  std::vector<double> two(2, 0.0);
  CHECK_THROWS_AS(irfft(ComplexSpectrum<double>{vec(two), vec(two)}),
                  DimensionError);
}

TEST_CASE("assemble_halfspectrum zeroes the boundary imaginary bins") {
  auto s = assemble_halfspectrum(vec({1, 2, 3}), vec({9, 5, 9}));
  CHECK(s.im.at(0) == 0.0);
  CHECK(s.im.at(1) == 5.0);
  CHECK(s.im.at(2) == 0.0);
  // mismatched halves
  CHECK_THROWS_AS(assemble_halfspectrum(vec({1, 2, 3}), vec({1, 2})),
                  DimensionError);
}

TEST_CASE("float transforms round-trip at single precision") {
  std::vector<float> xf(64);
  SplitMix64 rng(5);
  for (auto& v : xf) v = static_cast<float>(rng.uniform(-1, 1));
  Tensor<float> x = Tensor<float>::wrap({64}, xf);
  auto back = irfft(rfft(x));
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(back.at(i) == doctest::Approx(xf[i]).epsilon(5e-6));
  }
}

}  // TEST_SUITE
