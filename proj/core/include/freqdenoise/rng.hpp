#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace freqdenoise {

// SplitMix64 generator. Chosen over std::mt19937 because the full draw path
// (engine + distributions) is pinned here, so streams are identical across
// standard libraries and platforms. All project randomness flows through
// this type; reproducibility contracts depend on it never changing.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return finalize(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Standard normal via Box-Muller (one value per draw, no cached pair).
  double normal() {
    double u1 = next_unit();
    double u2 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Index in [0, n). Modulo bias is ~n/2^64, irrelevant at our pool sizes.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(n));
  }

  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream from a base seed and a path of integers
// (e.g. {tag, epoch, batch, element}). Streams for distinct paths are
// decorrelated, so parallel synthesis is order-independent.
inline SplitMix64 derive_stream(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = SplitMix64::finalize(seed ^ 0xA5A5A5A55A5A5A5AULL);
  for (std::uint64_t p : path) {
    s = SplitMix64::finalize(s ^ (p + 0x9E3779B97F4A7C15ULL));
  }
  return SplitMix64(s);
}

namespace stream_tag {
// Fixed tags so the derivation paths of different subsystems never collide.
inline constexpr std::uint64_t kTrain = 0x7261696E'00000001ULL;
inline constexpr std::uint64_t kTestEval = 0x7265737400000002ULL;
inline constexpr std::uint64_t kEval = 0x6576616C'00000003ULL;
inline constexpr std::uint64_t kInit = 0x696E6974'00000004ULL;
inline constexpr std::uint64_t kSplit = 0x73706C69'00000005ULL;
inline constexpr std::uint64_t kSynth = 0x73796E74'00000006ULL;
}  // namespace stream_tag

}  // namespace freqdenoise
