#include "freqdenoise/weights_file.hpp"

#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "freqdenoise/errors.hpp"

namespace freqdenoise {

namespace {
constexpr char kMagic[4] = {'E', 'D', 'N', 'W'};
constexpr std::uint32_t kVersion = 1;

using nlohmann::json;
}  // namespace

json model_config_to_json(const ModelConfig& cfg) {
  return json{{"signal_length", cfg.signal_length},
              {"steps", cfg.steps},
              {"channel_progression", cfg.channel_progression},
              {"branch_layers", cfg.branch_layers},
              {"branch_hidden_channels", cfg.branch_hidden_channels},
              {"branch_kernel_size", cfg.branch_kernel_size},
              {"epsilon_ratio", cfg.epsilon_ratio}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.signal_length = j.at("signal_length").get<std::size_t>();
  cfg.steps = j.at("steps").get<std::size_t>();
  cfg.channel_progression =
      j.at("channel_progression").get<std::vector<std::size_t>>();
  cfg.branch_layers = j.at("branch_layers").get<std::size_t>();
  cfg.branch_hidden_channels =
      j.at("branch_hidden_channels").get<std::size_t>();
  cfg.branch_kernel_size = j.at("branch_kernel_size").get<std::size_t>();
  cfg.epsilon_ratio = j.at("epsilon_ratio").get<double>();
  return cfg;
}

void write_weights_file(const std::string& path,
                        const WeightsFileContent& content) {
  json header;
  header["config"] = model_config_to_json(content.config);
  json table = json::array();
  std::size_t offset = 0;
  for (const auto& rec : content.tensors) {
    std::size_t elems = 1;
    for (std::size_t d : rec.shape) elems *= d;
    if (elems != rec.data.size()) {
      throw DimensionError("tensor record shape/data mismatch on write: " +
                           rec.name);
    }
    table.push_back(json{{"name", rec.name},
                         {"shape", rec.shape},
                         {"dtype", "f32"},
                         {"byte_offset", offset}});
    offset += elems * 4;
  }
  header["tensors"] = std::move(table);
  if (content.training) {
    const TrainingSection& t = *content.training;
    header["training"] =
        json{{"optimizer",
              {{"t", t.optimizer_t},
               {"alpha", t.alpha},
               {"beta1", t.beta1},
               {"beta2", t.beta2}}},
             {"rng_state", {{"seed", t.seed}}},
             {"epoch", t.epochs_completed},
             {"loss_weights",
              {{"a", t.loss_a}, {"b", t.loss_b}, {"c", t.loss_c}}}};
  }
  const std::string header_str = header.dump();

  std::vector<std::uint8_t> bytes;
  bytes.reserve(12 + header_str.size() + offset);
  bytes.insert(bytes.end(), kMagic, kMagic + 4);
  detail::put_u32le(bytes, kVersion);
  detail::put_u32le(bytes, static_cast<std::uint32_t>(header_str.size()));
  bytes.insert(bytes.end(), header_str.begin(), header_str.end());
  for (const auto& rec : content.tensors) {
    for (float v : rec.data) detail::put_f32le(bytes, v);
  }
  detail::write_file_bytes(path, bytes);
}

WeightsFileContent read_weights_file(const std::string& path) {
  std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes.data(), bytes.size());
  char magic[4];
  r.read_bytes(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::BadMagic,
                      "not an EDNW file: " + path);
  }
  std::uint32_t version = r.read_u32le("version");
  if (version != kVersion) {
    throw FormatError(FormatError::Kind::BadVersion,
                      "unsupported EDNW version " + std::to_string(version));
  }
  std::uint32_t header_len = r.read_u32le("header_length");
  if (r.remaining() < header_len) {
    throw FormatError(FormatError::Kind::Truncated,
                      "file truncated inside JSON header");
  }
  std::string header_str(header_len, '\0');
  r.read_bytes(header_str.data(), header_len, "header");

  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::BadHeader,
                      std::string("malformed JSON header: ") + e.what());
  }

  WeightsFileContent out;
  try {
    out.config = model_config_from_json(header.at("config"));
    std::size_t expected_offset = 0;
    for (const auto& entry : header.at("tensors")) {
      WeightsTensorRecord rec;
      rec.name = entry.at("name").get<std::string>();
      rec.shape = entry.at("shape").get<std::vector<std::size_t>>();
      const std::string dtype = entry.at("dtype").get<std::string>();
      if (dtype != "f32") {
        throw FormatError(FormatError::Kind::HeaderMismatch,
                          "unsupported dtype '" + dtype + "' for tensor " +
                              rec.name);
      }
      const std::size_t offset = entry.at("byte_offset").get<std::size_t>();
      if (offset != expected_offset) {
        throw FormatError(FormatError::Kind::HeaderMismatch,
                          "byte_offset of tensor " + rec.name +
                              " inconsistent with preceding tensor sizes");
      }
      std::size_t elems = 1;
      for (std::size_t d : rec.shape) elems *= d;
      if (elems == 0) {
        throw FormatError(FormatError::Kind::HeaderMismatch,
                          "tensor " + rec.name + " declares zero elements");
      }
      expected_offset += elems * 4;
      rec.data.resize(elems);
      out.tensors.push_back(std::move(rec));
    }
    if (header.contains("training")) {
      const json& t = header.at("training");
      TrainingSection ts;
      ts.optimizer_t = t.at("optimizer").at("t").get<std::int64_t>();
      ts.alpha = t.at("optimizer").at("alpha").get<double>();
      ts.beta1 = t.at("optimizer").at("beta1").get<double>();
      ts.beta2 = t.at("optimizer").at("beta2").get<double>();
      ts.seed = t.at("rng_state").at("seed").get<std::uint64_t>();
      ts.epochs_completed = t.at("epoch").get<std::uint64_t>();
      ts.loss_a = t.at("loss_weights").at("a").get<double>();
      ts.loss_b = t.at("loss_weights").at("b").get<double>();
      ts.loss_c = t.at("loss_weights").at("c").get<double>();
      out.training = ts;
    }
  } catch (const FormatError&) {
    throw;
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::BadHeader,
                      std::string("invalid header fields: ") + e.what());
  }

  std::size_t total_payload = 0;
  for (const auto& rec : out.tensors) total_payload += rec.data.size() * 4;
  if (r.remaining() < total_payload) {
    throw FormatError(FormatError::Kind::Truncated,
                      "payload shorter than the header-declared " +
                          std::to_string(total_payload) + " bytes");
  }
  if (r.remaining() > total_payload) {
    throw FormatError(FormatError::Kind::HeaderMismatch,
                      "payload larger than the header-declared " +
                          std::to_string(total_payload) + " bytes");
  }
  for (auto& rec : out.tensors) {
    for (auto& v : rec.data) {
      v = r.read_f32le("payload");
      if (!std::isfinite(v)) {
        throw FormatError(FormatError::Kind::NonFinite,
                          "non-finite value in tensor " + rec.name);
      }
    }
  }
  return out;
}

}  // namespace freqdenoise
