#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netburst/baselines.hpp"
#include "netburst/forecaster.hpp"
#include "netburst/metrics.hpp"
#include "netburst/series.hpp"
#include "netburst/synth.hpp"

namespace netburst {

// Synthetic corpus spec. kinds: bursty, seasonal, two_regime (bursty +
// bursty_b), contrast (bursty + seasonal). Per-entity seeds derive from the
// experiment seed and the entity index.
struct SynthSpec {
  std::string kind = "bursty";
  int entities = 8;
  int entities_b = 8;
  BurstyConfig bursty;
  BurstyConfig bursty_b;
  SeasonalConfig seasonal;
  bool noise = false;  // Pareto noise floor on every window
  double noise_alpha = 1.5;
  double noise_xm = 1.0;
};

// Resolved experiment configuration; loaded from strict JSON (unknown keys
// are configuration errors) and echoed verbatim into every report.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string out = "out";
  int jobs = 0;  // 0 keeps the OpenMP default
  double window_ms = 100.0;
  double t_act = 0.0;
  SplitSpec split;
  int ibg_bins = 256;
  int bi_bins = 256;
  int raw_bins = 256;
  std::int64_t horizon = 0;  // 0: each entity's full test length
  int max_context_events = 512;
  std::string decode_mode = "sample";  // sample | greedy
  double temperature = 1.0;
  double max_events_factor = 10.0;
  ModelConfig model;  // vocab is filled from fitted codebooks
  bool mase_event_scale = false;
  int acf_max_lag = 128;
  std::string trace;
  std::string series_dir;
  std::string series_file;
  std::string model_dir;
  std::string codebook_scheme = "quantile";
  SynthSpec synth;
  bool has_synth = false;
  std::vector<double> thresholds{100.0, 200.0, 300.0};
  int group_size = 16;
  std::vector<int> ks{2, 3, 4};

  static ExperimentConfig load(const std::string& path);
  std::string echo_json() const;  // resolved config, serialized

  DecodeOptions decode_options(std::uint64_t decode_seed) const;
};

struct Corpus {
  std::vector<std::string> keys;
  std::vector<TimeSeries> series;

  std::size_t size() const { return series.size(); }
};

// Generates the synthetic corpus named by cfg.synth (deterministic in
// cfg.seed) or loads one from cfg.series_dir / cfg.trace.
Corpus build_corpus(const ExperimentConfig& cfg);
Corpus synth_corpus(const ExperimentConfig& cfg);
void write_corpus(const Corpus& corpus, const ExperimentConfig& cfg,
                  const std::string& dir);
Corpus load_corpus_dir(const std::string& dir);

// CLI commands. Each writes its outputs under cfg.out and returns 0; errors
// surface as ConfigError/DataError/NumericError (exit codes 1/2/3). Stage
// wall-clock times go to stderr so output files stay byte-reproducible.
int cmd_ingest(const ExperimentConfig& cfg);
int cmd_synth(const ExperimentConfig& cfg);
int cmd_eventize(const ExperimentConfig& cfg);
int cmd_fit_codebook(const ExperimentConfig& cfg);
int cmd_train(const ExperimentConfig& cfg);
int cmd_forecast(const ExperimentConfig& cfg);
int cmd_evaluate(const ExperimentConfig& cfg);
int cmd_ablate(const ExperimentConfig& cfg);
int cmd_transfer(const ExperimentConfig& cfg);
int cmd_embed(const ExperimentConfig& cfg);
int cmd_stats(const ExperimentConfig& cfg);

// Shared per-entity evaluation used by evaluate/ablate/transfer.
struct EntityEval {
  std::string status = "ok";
  bool mase_ok = false;
  double mase = 0.0;
  bool wd_ok = false;
  double wd_window = 0.0;
  bool wd_streams_ok = false;
  double wd_ibg = 0.0;
  double wd_bi = 0.0;
  std::size_t truth_events = 0;
  Forecast fc;
};

EntityEval evaluate_forecast(const Forecast& fc, const SplitResult& sp,
                             std::int64_t horizon, double t_act,
                             bool event_scale);

}  // namespace netburst
