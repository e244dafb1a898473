#pragma once

#include <cstddef>
#include <vector>

namespace freqdenoise {

// Architecture hyperparameters of the denoising network. Step s of the
// filter cascade maps channel_progression[s] input channels to
// channel_progression[s+1] output channels; the first and last entries are
// 1 because the model consumes and produces a single-channel signal.
struct ModelConfig {
  std::size_t signal_length = 512;  // N, power of two
  std::size_t steps = 3;            // S, kernel-evaluator blocks
  std::vector<std::size_t> channel_progression{1, 8, 8, 1};
  std::size_t branch_layers = 4;            // B, convs per spectral branch
  std::size_t branch_hidden_channels = 32;  // H
  std::size_t branch_kernel_size = 15;      // k, odd
  double epsilon_ratio = 1e-8;              // PSD ratio guard

  std::size_t frequency_bins() const { return signal_length / 2 + 1; }

  // Filters emitted by the kernel evaluator of step s (0-based):
  // c = C_out * C_in.
  std::size_t step_filter_count(std::size_t s) const {
    return channel_progression[s + 1] * channel_progression[s];
  }

  // Throws ConfigError listing every violated field.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// Closed-form trainable parameter count: per step with c filters,
//   2 * [3*H*k + H + (B-2)*(H*H*k + H) + H*c*k + c] + (c*c + c)
// covering both spectral branches plus the size-1 mixing convolution.
std::size_t parameter_count(const ModelConfig& cfg);

}  // namespace freqdenoise
