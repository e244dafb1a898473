#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freqdenoise/data.hpp"
#include "freqdenoise/model_config.hpp"
#include "freqdenoise/training.hpp"

namespace freqdenoise {

// One JSON document drives a whole run. Every field has a default, so `{}`
// is a valid smoke configuration (synthetic corpus, small training run);
// unknown keys anywhere in the document are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t signal_length = 512;

  struct ModelSection {
    std::size_t steps = 3;
    std::vector<std::size_t> channel_progression{1, 8, 8, 1};
    std::size_t branch_layers = 4;
    std::size_t branch_hidden_channels = 32;
    std::size_t branch_kernel_size = 15;
    double epsilon_ratio = 1e-8;
  } model;

  struct TrainSection {
    std::size_t epochs = 5;
    std::size_t batch_size = 16;
    std::size_t steps_per_epoch = 0;  // 0: derived from the EEG pool
    double alpha = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    LossWeights loss_weights;
    double snr_train_range[2] = {-7.0, 4.0};
    double snr_test_range[2] = {-7.0, 2.0};
    std::size_t checkpoint_every = 0;
    std::size_t test_examples = 32;
    bool fast_conv = false;
  } train;

  struct DataSection {
    std::string eeg_path;
    std::string eog_path;
    std::string emg_path;
    std::string format = "ednb";  // or "csv"
    double train_fraction = 0.6;
    std::size_t synthetic_count = 64;  // used when no paths are given
    std::string snr_convention = "rms_db10";  // or "rms_db20"
  } data;

  struct EvalSection {
    std::vector<int> snr_grid{-7, -6, -5, -4, -3, -2, -1, 0, 1, 2};
    std::size_t per_level_count = 10;
  } eval;

  ModelConfig model_config() const;
  TrainOptions train_options() const;  // seed/threads/dirs filled by the CLI
  SnrConvention convention() const;

  // Collects every violation into one ConfigError.
  void validate() const;
};

RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json_text(const std::string& text);

}  // namespace freqdenoise
