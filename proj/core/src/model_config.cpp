#include "freqdenoise/model_config.hpp"

#include <string>

#include "freqdenoise/errors.hpp"
#include "freqdenoise/fft.hpp"

namespace freqdenoise {

void ModelConfig::validate() const {
  std::vector<std::string> bad;
  if (signal_length < 4 || !is_pow2(signal_length)) {
    bad.push_back("signal_length must be a power of two >= 4");
  }
  if (steps < 1) bad.push_back("steps must be >= 1");
  if (channel_progression.size() != steps + 1) {
    bad.push_back("channel_progression must have steps+1 entries");
  } else {
    if (channel_progression.front() != 1 || channel_progression.back() != 1) {
      bad.push_back("channel_progression must start and end with 1");
    }
    for (std::size_t c : channel_progression) {
      if (c == 0) {
        bad.push_back("channel_progression entries must be positive");
        break;
      }
    }
  }
  if (branch_layers < 2) bad.push_back("branch_layers must be >= 2");
  if (branch_hidden_channels < 1) {
    bad.push_back("branch_hidden_channels must be >= 1");
  }
  if (branch_kernel_size < 1 || branch_kernel_size % 2 == 0) {
    bad.push_back("branch_kernel_size must be odd and >= 1");
  } else if (signal_length >= 4 &&
             branch_kernel_size > 2 * frequency_bins() - 1) {
    bad.push_back("branch_kernel_size exceeds 2*F-1 for this signal_length");
  }
  if (!(epsilon_ratio > 0.0)) bad.push_back("epsilon_ratio must be > 0");
  if (!bad.empty()) throw ConfigError(bad);
}

std::size_t parameter_count(const ModelConfig& cfg) {
  const std::size_t h = cfg.branch_hidden_channels;
  const std::size_t k = cfg.branch_kernel_size;
  const std::size_t b = cfg.branch_layers;
  std::size_t total = 0;
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    const std::size_t c = cfg.step_filter_count(s);
    const std::size_t branch =
        3 * h * k + h + (b - 2) * (h * h * k + h) + h * c * k + c;
    total += 2 * branch + (c * c + c);
  }
  return total;
}

}  // namespace freqdenoise
