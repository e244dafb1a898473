#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "freqdenoise/model_config.hpp"

namespace freqdenoise {

// EDNW weight container:
//   magic "EDNW" | u32 LE version=1 | u32 LE header_length |
//   UTF-8 JSON header | raw 32-bit LE float payloads in header order.
// The header carries the model config and an ordered tensor table of
// {name, shape, dtype:"f32", byte_offset} with offsets relative to the
// start of the payload section. Checkpoints reuse the container with an
// extra "training" header section and opt_m.*/opt_u.* tensor records
// appended after the parameters.

struct WeightsTensorRecord {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> data;
};

struct TrainingSection {
  std::int64_t optimizer_t = 0;
  double alpha = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  std::uint64_t epochs_completed = 0;
  double loss_a = 0.25;
  double loss_b = 0.25;
  double loss_c = 0.5;
};

struct WeightsFileContent {
  ModelConfig config;
  std::vector<WeightsTensorRecord> tensors;
  std::optional<TrainingSection> training;
};

void write_weights_file(const std::string& path,
                        const WeightsFileContent& content);
WeightsFileContent read_weights_file(const std::string& path);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace freqdenoise
