// freqdenoise: train and run the frequency-conditioned EEG denoiser.
// Subcommands: synth | train | eval | denoise. Exit codes: 0 success,
// 1 runtime error, 2 usage/validation error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "freqdenoise/metrics.hpp"
#include "freqdenoise/training.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace freqdenoise;

namespace {

std::size_t env_threads() {
  if (const char* env = std::getenv("FREQDENOISE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

struct Pools {
  SegmentPools<float> train;
  SegmentPools<float> test;
};

// Segment pools per the config: named files when paths are given, otherwise
// the seeded synthetic corpus; both sides come from the same seeded split so
// train and test never share segments.
Pools build_pools(const RunConfig& rc) {
  std::vector<Segment<float>> eeg, eog, emg;
  if (rc.data.eeg_path.empty()) {
    auto corpus = generate_synthetic_corpus<float>(
        rc.data.synthetic_count, rc.seed, rc.signal_length);
    eeg = filter_kind(corpus, SegmentKind::Eeg);
    eog = filter_kind(corpus, SegmentKind::Eog);
    emg = filter_kind(corpus, SegmentKind::Emg);
  } else {
    const SegmentFileFormat fmt = rc.data.format == "csv"
                                      ? SegmentFileFormat::Csv
                                      : SegmentFileFormat::Ednb;
    eeg = load_segments<float>(rc.data.eeg_path, fmt, SegmentKind::Eeg);
    if (!rc.data.eog_path.empty()) {
      eog = load_segments<float>(rc.data.eog_path, fmt, SegmentKind::Eog);
    }
    if (!rc.data.emg_path.empty()) {
      emg = load_segments<float>(rc.data.emg_path, fmt, SegmentKind::Emg);
    }
    for (const auto* pool : {&eeg, &eog, &emg}) {
      for (const auto& s : *pool) {
        if (s.samples.size() != rc.signal_length) {
          throw ConfigError("segment length " +
                            std::to_string(s.samples.size()) + " in " +
                            s.source_id + " does not match signal_length " +
                            std::to_string(rc.signal_length));
        }
      }
    }
  }
  Pools pools;
  auto split_into = [&](std::vector<Segment<float>>& all, std::uint64_t tag,
                        std::vector<Segment<float>>& train_dst,
                        std::vector<Segment<float>>& test_dst) {
    if (all.empty()) return;
    auto [tr, te] = split(all, rc.data.train_fraction, rc.seed ^ tag);
    train_dst = std::move(tr);
    test_dst = std::move(te);
  };
  split_into(eeg, 0x0EEC, pools.train.eeg, pools.test.eeg);
  split_into(eog, 0x0E06, pools.train.eog, pools.test.eog);
  split_into(emg, 0x0E36, pools.train.emg, pools.test.emg);
  return pools;
}

int run_synth(const std::string& out_dir, std::size_t count,
              std::uint64_t seed, std::size_t length) {
  fs::create_directories(out_dir);
  auto corpus = generate_synthetic_corpus<float>(count, seed, length);
  for (SegmentKind kind :
       {SegmentKind::Eeg, SegmentKind::Eog, SegmentKind::Emg}) {
    auto pool = filter_kind(corpus, kind);
    const std::string path =
        out_dir + "/" + std::string(to_string(kind)) + ".ednb";
    save_segments_ednb(path, pool, kind);
    std::printf("%s: %zu segments of length %zu -> %s\n", to_string(kind),
                pool.size(), length, path.c_str());
  }
  return 0;
}

int run_train(const std::string& config_path, const std::string& resume_path,
              const std::string& out_dir, std::size_t threads) {
  RunConfig rc = load_run_config(config_path);
  rc.validate();
  const ModelConfig cfg = rc.model_config();
  fs::create_directories(out_dir);

  Pools pools = build_pools(rc);
  TrainOptions opts = rc.train_options();
  opts.threads = threads;
  opts.checkpoint_dir = out_dir;
  opts.on_epoch = [](const TrainRecord& rec) {
    std::printf("epoch %zu: train %.6f test %.6f (%.1fs)\n", rec.epoch,
                rec.train_loss, rec.test_loss, rec.seconds);
    std::fflush(stdout);
  };

  std::optional<Checkpoint<float>> resume;
  if (!resume_path.empty()) {
    resume = checkpoint_load<float>(resume_path);
  }

  std::printf("model parameters: %zu\n", parameter_count(cfg));
  std::printf(
      "train pool: %zu eeg / %zu eog / %zu emg; test pool: %zu/%zu/%zu\n",
      pools.train.eeg.size(), pools.train.eog.size(), pools.train.emg.size(),
      pools.test.eeg.size(), pools.test.eog.size(), pools.test.emg.size());

  auto result = train(cfg, pools.train, pools.test, opts, std::move(resume));

  const std::string weights_path = out_dir + "/weights.ednw";
  save_weights(weights_path, cfg, result.params);
  const std::string history_path = out_dir + "/history.csv";
  const bool append = !resume_path.empty() && fs::exists(history_path);
  write_history_csv(history_path, result.history, append);

  std::printf("weights -> %s\n", weights_path.c_str());
  return 0;
}

int run_eval(const std::string& weights_path, const std::string& config_path,
             const std::string& artifact, const std::string& out_dir,
             std::optional<std::uint64_t> seed_override, std::size_t threads) {
  RunConfig rc = load_run_config(config_path);
  rc.validate();
  if (seed_override) rc.seed = *seed_override;
  auto [wcfg, params] = load_weights<float>(weights_path);
  if (!(wcfg == rc.model_config())) {
    throw Error(
        "weights are incompatible with the config's model section (shape or "
        "hyperparameter mismatch)");
  }
  fs::create_directories(out_dir);
  Pools pools = build_pools(rc);

  std::vector<SegmentKind> kinds;
  if (artifact == "eog" || artifact == "both") {
    kinds.push_back(SegmentKind::Eog);
  }
  if (artifact == "emg" || artifact == "both") {
    kinds.push_back(SegmentKind::Emg);
  }

  Denoiser<float> model_fn = model_denoiser(
      rc.model_config(), params,
      rc.train.fast_conv ? ConvPolicy::Fft : ConvPolicy::Direct);
  Denoiser<float> identity_fn = [](const Tensor<float>& y,
                                   const Tensor<float>&,
                                   const Tensor<float>&) { return y; };
  Denoiser<float> oracle_fn = [&rc](const Tensor<float>& y,
                                    const Tensor<float>& pn,
                                    const Tensor<float>& py) {
    return baseline_oracle_spectral(y, pn, py,
                                    static_cast<float>(rc.model.epsilon_ratio));
  };

  for (SegmentKind kind : kinds) {
    const auto& noise_pool =
        kind == SegmentKind::Eog ? pools.test.eog : pools.test.emg;
    if (noise_pool.empty()) {
      throw EmptyDatasetError(std::string("no test segments for artifact ") +
                              to_string(kind));
    }
    ReportBundle bundle;
    bundle.model = evaluate(model_fn, pools.test.eeg, noise_pool, kind,
                            rc.eval.snr_grid, rc.eval.per_level_count, rc.seed,
                            rc.convention(), threads);
    bundle.identity = evaluate(identity_fn, pools.test.eeg, noise_pool, kind,
                               rc.eval.snr_grid, rc.eval.per_level_count,
                               rc.seed, rc.convention(), threads);
    bundle.oracle = evaluate(oracle_fn, pools.test.eeg, noise_pool, kind,
                             rc.eval.snr_grid, rc.eval.per_level_count,
                             rc.seed, rc.convention(), threads);
    const std::string base = out_dir + "/eval_" + std::string(to_string(kind));
    write_report_csv(base + ".csv", bundle);
    write_report_json(base + ".json", bundle);
    std::printf(
        "%s summary: model RRMSE_t %.3f RRMSE_f %.3f CC %.3f | identity "
        "RRMSE_t %.3f | oracle RRMSE_t %.3f\n",
        to_string(kind), bundle.model.summary.rrmse_t,
        bundle.model.summary.rrmse_f, bundle.model.summary.cc,
        bundle.identity.summary.rrmse_t, bundle.oracle.summary.rrmse_t);
    std::printf("reports -> %s.csv / %s.json\n", base.c_str(), base.c_str());
  }
  return 0;
}

int run_denoise(const std::string& weights_path, const std::string& in_path,
                const std::string& psd_path, const std::string& out_path,
                const std::string& trace_dir) {
  auto [cfg, params] = load_weights<float>(weights_path);
  const std::size_t n = cfg.signal_length;
  const std::size_t f = cfg.frequency_bins();

  std::vector<std::vector<float>> segments;
  if (in_path.size() >= 4 && in_path.substr(in_path.size() - 4) == ".csv") {
    for (const auto& row : read_csv_rows(in_path)) {
      segments.emplace_back(row.begin(), row.end());
    }
  } else {
    segments = read_ednb(in_path).segments;
  }
  const auto psd_rows = read_csv_rows(psd_path);
  if (psd_rows.size() != segments.size()) {
    throw PairingError("segment/PSD count mismatch: " +
                       std::to_string(segments.size()) + " segments vs " +
                       std::to_string(psd_rows.size()) + " PSD rows");
  }

  if (!trace_dir.empty()) fs::create_directories(trace_dir);
  EdnbContent out;
  out.kind = SegmentKind::Eeg;
  out.segment_length = n;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].size() != n) {
      throw DimensionError("segment " + std::to_string(i) + " has length " +
                           std::to_string(segments[i].size()) +
                           ", weights expect " + std::to_string(n));
    }
    if (psd_rows[i].size() != f) {
      throw DimensionError("PSD row " + std::to_string(i) + " has " +
                           std::to_string(psd_rows[i].size()) +
                           " bins, expected " + std::to_string(f));
    }
    Tensor<float> y = Tensor<float>::from_vector(
        {n}, std::vector<float>(segments[i].begin(), segments[i].end()));
    const double mu = mean_of(y);
    const double sigma = stddev_of(y);
    if (!(sigma > 0.0)) {
      throw DegenerateInputError("segment " + std::to_string(i) +
                                 " has zero variance");
    }
    std::vector<float> yh(n);
    for (std::size_t t = 0; t < n; ++t) {
      yh[t] = static_cast<float>((y.at(t) - mu) / sigma);
    }
    Tensor<float> y_hat = Tensor<float>::wrap({n}, std::move(yh));
    std::vector<float> pn(psd_rows[i].begin(), psd_rows[i].end());
    Tensor<float> psd_noise = Tensor<float>::from_vector({f}, std::move(pn));
    Tensor<float> psd_noisy = psd(y_hat);
    Tensor<float> pred = denoise(cfg, params, y_hat, psd_noise, psd_noisy);

    std::vector<float> denoised(n);
    for (std::size_t t = 0; t < n; ++t) {
      denoised[t] = static_cast<float>(pred.at(t) * sigma + mu);
    }
    if (!trace_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof(name), "trace_%04zu.csv", i);
      std::ofstream trace(trace_dir + "/" + name, std::ios::trunc);
      if (!trace) throw IoError("cannot write trace file in " + trace_dir);
      trace << "timestep,noisy,denoised\n";
      char line[96];
      for (std::size_t t = 0; t < n; ++t) {
        std::snprintf(line, sizeof(line), "%zu,%.9g,%.9g\n", t,
                      static_cast<double>(y.at(t)),
                      static_cast<double>(denoised[t]));
        trace << line;
      }
    }
    out.segments.push_back(std::move(denoised));
  }
  write_ednb(out_path, out);
  std::printf("denoised %zu segments -> %s\n", out.segments.size(),
              out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency-conditioned EEG denoiser"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand(
      "synth", "Write a synthetic EDNB corpus (eeg/eog/emg files)");
  std::string synth_out;
  std::size_t synth_count = 0;
  std::uint64_t synth_seed = 1;
  std::size_t synth_length = 512;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--count", synth_count, "Segments per kind")
      ->required()
      ->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "RNG seed");
  synth->add_option("--length", synth_length, "Segment length in samples");

  auto* train_cmd =
      app.add_subcommand("train", "Train the model per a JSON config");
  std::string train_config, train_resume, train_out = ".";
  std::size_t train_threads = env_threads();
  train_cmd->add_option("--config", train_config, "Run config JSON")
      ->required();
  train_cmd->add_option("--resume", train_resume,
                        "Checkpoint file to continue from");
  train_cmd->add_option("--out", train_out, "Output directory");
  train_cmd->add_option("--threads", train_threads,
                        "Worker threads (default FREQDENOISE_THREADS or 1)");

  auto* eval_cmd = app.add_subcommand(
      "eval", "Evaluate weights over the SNR grid and emit reports");
  std::string eval_weights, eval_config, eval_artifact = "both",
                            eval_out = ".";
  std::uint64_t eval_seed = 0;
  bool eval_seed_set = false;
  std::size_t eval_threads = env_threads();
  eval_cmd->add_option("--weights", eval_weights, "EDNW weight file")
      ->required();
  eval_cmd->add_option("--config", eval_config, "Run config JSON")->required();
  eval_cmd->add_option("--artifact", eval_artifact, "eog | emg | both")
      ->check(CLI::IsMember({"eog", "emg", "both"}));
  eval_cmd->add_option("--out", eval_out, "Output directory");
  eval_cmd->add_option("--seed", eval_seed, "Override the config seed")
      ->each([&](const std::string&) { eval_seed_set = true; });
  eval_cmd->add_option("--threads", eval_threads, "Worker threads");

  auto* den_cmd = app.add_subcommand(
      "denoise", "Denoise noisy segments given their noise PSDs");
  std::string den_weights, den_in, den_psd, den_out, den_trace;
  den_cmd->add_option("--weights", den_weights, "EDNW weight file")
      ->required();
  den_cmd->add_option("--in", den_in, "Noisy segments (.ednb or .csv)")
      ->required();
  den_cmd
      ->add_option("--noise-psd", den_psd,
                   "CSV of standardized noise PSDs, one row per segment")
      ->required();
  den_cmd->add_option("--out", den_out, "Output EDNB file")->required();
  den_cmd->add_option(
      "--trace", den_trace,
      "Directory for per-segment timestep,noisy,denoised CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      return run_synth(synth_out, synth_count, synth_seed, synth_length);
    }
    if (train_cmd->parsed()) {
      return run_train(train_config, train_resume, train_out, train_threads);
    }
    if (eval_cmd->parsed()) {
      return run_eval(
          eval_weights, eval_config, eval_artifact, eval_out,
          eval_seed_set ? std::optional<std::uint64_t>(eval_seed)
                        : std::nullopt,
          eval_threads);
    }
    if (den_cmd->parsed()) {
      return run_denoise(den_weights, den_in, den_psd, den_out, den_trace);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
