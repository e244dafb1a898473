#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace freqdenoise {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& scope, std::vector<std::string>& bad) {
  if (!j.is_object()) {
    bad.push_back(scope + " must be a JSON object");
    return;
  }
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      bad.push_back("unknown key " + scope + "." + key);
    }
  }
}

template <class T>
void read_field(const json& j, const char* key, T& dst,
                const std::string& scope, std::vector<std::string>& bad) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad.push_back(scope + "." + key + " has the wrong type");
  }
}

void read_range(const json& j, const char* key, double (&dst)[2],
                const std::string& scope, std::vector<std::string>& bad) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
      !v[1].is_number()) {
    bad.push_back(scope + "." + key + " must be [lo, hi]");
    return;
  }
  dst[0] = v[0].get<double>();
  dst[1] = v[1].get<double>();
}

}  // namespace

ModelConfig RunConfig::model_config() const {
  ModelConfig cfg;
  cfg.signal_length = signal_length;
  cfg.steps = model.steps;
  cfg.channel_progression = model.channel_progression;
  cfg.branch_layers = model.branch_layers;
  cfg.branch_hidden_channels = model.branch_hidden_channels;
  cfg.branch_kernel_size = model.branch_kernel_size;
  cfg.epsilon_ratio = model.epsilon_ratio;
  return cfg;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions opts;
  opts.epochs = train.epochs;
  opts.batch_size = train.batch_size;
  opts.steps_per_epoch = train.steps_per_epoch;
  opts.alpha = train.alpha;
  opts.beta1 = train.beta1;
  opts.beta2 = train.beta2;
  opts.weights = train.loss_weights;
  opts.snr_train_lo = train.snr_train_range[0];
  opts.snr_train_hi = train.snr_train_range[1];
  opts.snr_test_lo = train.snr_test_range[0];
  opts.snr_test_hi = train.snr_test_range[1];
  opts.test_examples = train.test_examples;
  opts.checkpoint_every = train.checkpoint_every;
  opts.seed = seed;
  opts.snr_convention = convention();
  opts.conv_policy = train.fast_conv ? ConvPolicy::Fft : ConvPolicy::Direct;
  return opts;
}

SnrConvention RunConfig::convention() const {
  return data.snr_convention == "rms_db20" ? SnrConvention::RmsDb20
                                           : SnrConvention::RmsDb10;
}

void RunConfig::validate() const {
  std::vector<std::string> bad;
  try {
    model_config().validate();
  } catch (const ConfigError& e) {
    for (const auto& v : e.violations()) bad.push_back("model: " + v);
  }
  const auto& w = train.loss_weights;
  if (w.a < 0 || w.b < 0 || w.c < 0 || !(w.a + w.b + w.c > 0)) {
    bad.push_back(
        "train.loss_weights must be nonnegative with a + b + c > 0");
  }
  if (train.epochs < 1) bad.push_back("train.epochs must be >= 1");
  if (train.batch_size < 1) bad.push_back("train.batch_size must be >= 1");
  if (!(train.alpha > 0)) bad.push_back("train.alpha must be > 0");
  if (!(train.beta1 >= 0 && train.beta1 < 1)) {
    bad.push_back("train.beta1 must lie in [0, 1)");
  }
  if (!(train.beta2 >= 0 && train.beta2 < 1)) {
    bad.push_back("train.beta2 must lie in [0, 1)");
  }
  if (!(train.snr_train_range[0] <= train.snr_train_range[1])) {
    bad.push_back("train.snr_train_range must be ordered");
  }
  if (!(train.snr_test_range[0] <= train.snr_test_range[1])) {
    bad.push_back("train.snr_test_range must be ordered");
  }
  if (train.test_examples < 1) {
    bad.push_back("train.test_examples must be >= 1");
  }
  if (data.format != "ednb" && data.format != "csv") {
    bad.push_back("data.format must be \"ednb\" or \"csv\"");
  }
  if (!(data.train_fraction > 0.0 && data.train_fraction < 1.0)) {
    bad.push_back("data.train_fraction must lie in (0, 1)");
  }
  const bool any_path = !data.eeg_path.empty() || !data.eog_path.empty() ||
                        !data.emg_path.empty();
  if (any_path && data.eeg_path.empty()) {
    bad.push_back("data.paths.eeg is required when any path is given");
  }
  if (any_path && data.eog_path.empty() && data.emg_path.empty()) {
    bad.push_back("data.paths needs at least one of eog/emg");
  }
  if (!any_path && data.synthetic_count < 1) {
    bad.push_back("data.synthetic_count must be >= 1");
  }
  if (data.snr_convention != "rms_db10" && data.snr_convention != "rms_db20") {
    bad.push_back("data.snr_convention must be rms_db10 or rms_db20");
  }
  if (eval.snr_grid.empty()) bad.push_back("eval.snr_grid must be nonempty");
  if (eval.per_level_count < 1) {
    bad.push_back("eval.per_level_count must be >= 1");
  }
  if (!bad.empty()) throw ConfigError(bad);
}

RunConfig run_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  std::vector<std::string> bad;
  check_keys(j, {"seed", "signal_length", "model", "train", "data", "eval"},
             "config", bad);

  RunConfig rc;
  read_field(j, "seed", rc.seed, "config", bad);
  read_field(j, "signal_length", rc.signal_length, "config", bad);

  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m,
               {"steps", "channel_progression", "branch_layers",
                "branch_hidden_channels", "branch_kernel_size",
                "epsilon_ratio"},
               "model", bad);
    read_field(m, "steps", rc.model.steps, "model", bad);
    read_field(m, "channel_progression", rc.model.channel_progression,
               "model", bad);
    read_field(m, "branch_layers", rc.model.branch_layers, "model", bad);
    read_field(m, "branch_hidden_channels", rc.model.branch_hidden_channels,
               "model", bad);
    read_field(m, "branch_kernel_size", rc.model.branch_kernel_size, "model",
               bad);
    read_field(m, "epsilon_ratio", rc.model.epsilon_ratio, "model", bad);
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t,
               {"epochs", "batch_size", "steps_per_epoch", "alpha", "beta1",
                "beta2", "loss_weights", "snr_train_range", "snr_test_range",
                "checkpoint_every", "test_examples", "fast_conv"},
               "train", bad);
    read_field(t, "epochs", rc.train.epochs, "train", bad);
    read_field(t, "batch_size", rc.train.batch_size, "train", bad);
    read_field(t, "steps_per_epoch", rc.train.steps_per_epoch, "train", bad);
    read_field(t, "alpha", rc.train.alpha, "train", bad);
    read_field(t, "beta1", rc.train.beta1, "train", bad);
    read_field(t, "beta2", rc.train.beta2, "train", bad);
    if (t.contains("loss_weights")) {
      const json& lw = t.at("loss_weights");
      check_keys(lw, {"a", "b", "c"}, "train.loss_weights", bad);
      read_field(lw, "a", rc.train.loss_weights.a, "train.loss_weights", bad);
      read_field(lw, "b", rc.train.loss_weights.b, "train.loss_weights", bad);
      read_field(lw, "c", rc.train.loss_weights.c, "train.loss_weights", bad);
    }
    read_range(t, "snr_train_range", rc.train.snr_train_range, "train", bad);
    read_range(t, "snr_test_range", rc.train.snr_test_range, "train", bad);
    read_field(t, "checkpoint_every", rc.train.checkpoint_every, "train",
               bad);
    read_field(t, "test_examples", rc.train.test_examples, "train", bad);
    read_field(t, "fast_conv", rc.train.fast_conv, "train", bad);
  }

  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d,
               {"paths", "format", "train_fraction", "synthetic_count",
                "snr_convention"},
               "data", bad);
    if (d.contains("paths")) {
      const json& p = d.at("paths");
      check_keys(p, {"eeg", "eog", "emg"}, "data.paths", bad);
      read_field(p, "eeg", rc.data.eeg_path, "data.paths", bad);
      read_field(p, "eog", rc.data.eog_path, "data.paths", bad);
      read_field(p, "emg", rc.data.emg_path, "data.paths", bad);
    }
    read_field(d, "format", rc.data.format, "data", bad);
    read_field(d, "train_fraction", rc.data.train_fraction, "data", bad);
    read_field(d, "synthetic_count", rc.data.synthetic_count, "data", bad);
    read_field(d, "snr_convention", rc.data.snr_convention, "data", bad);
  }

  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, {"snr_grid", "per_level_count"}, "eval", bad);
    read_field(e, "snr_grid", rc.eval.snr_grid, "eval", bad);
    read_field(e, "per_level_count", rc.eval.per_level_count, "eval", bad);
  }

  if (!bad.empty()) throw ConfigError(bad);
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return run_config_from_json_text(ss.str());
}

}  // namespace freqdenoise
