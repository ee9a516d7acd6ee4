#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netburst/codebook.hpp"
#include "netburst/eventize.hpp"
#include "netburst/model.hpp"
#include "netburst/series.hpp"

namespace netburst {

// The assembled pipeline: one quantile codebook and one token model per
// stream (gaps and intensities), sharing an activity threshold and window.
struct NetBurstModel {
  double t_act = 0.0;
  double window_ms = 1.0;
  Codebook ibg_cb;
  Codebook bi_cb;
  TokenModel ibg_model;
  TokenModel bi_model;
  double mean_train_ibg = 1.0;  // sets the decode cap
  int max_context_events = 512;
  TrainReport ibg_report;
  TrainReport bi_report;

  // Directory layout: {ibg,bi}.codebook.txt, {ibg,bi}.ckpt, model.json.
  void save(const std::string& dir) const;
  static NetBurstModel load(const std::string& dir);
};

struct NetBurstOptions {
  int ibg_bins = 256;
  int bi_bins = 256;
  ModelConfig ibg_model;
  ModelConfig bi_model;
  CentroidStat centroid = CentroidStat::mean;
  int max_context_events = 512;
};

struct DecodeOptions {
  GenMode mode = GenMode::Sample(1.0, 0);
  double max_events_factor = 10.0;  // cap = factor * horizon / mean train gap
  bool tokenized_oracle = false;    // oracle streams pass through the codebook
};

enum class OracleStream { ibg, bi, both };

struct Forecast {
  TimeSeries series;
  std::vector<double> gaps;
  std::vector<double> intensities;
  std::vector<int> ibg_tokens;  // empty for an oracle-substituted stream
  std::vector<int> bi_tokens;
  std::int64_t horizon = 0;
};

// Eventizes every training series at t_act, fits the two quantile codebooks
// on the pooled gap/intensity values, tokenizes per-series streams and trains
// the two models (validation streams drive early stopping). Vocabulary sizes
// come from the fitted codebooks' effective bin counts.
NetBurstModel fit_netburst(const std::vector<TimeSeries>& train_series,
                           const std::vector<TimeSeries>& val_series,
                           double t_act, const NetBurstOptions& opt);

// Tokenizes the context's event streams, decodes gap tokens until the
// accumulated gap covers the horizon (bounded by the decode cap), decodes one
// intensity per event, and spike-places the result. The first decoded gap is
// anchored at the last context burst start, keeping start-to-start semantics
// across the context/forecast boundary.
Forecast forecast(const NetBurstModel& m, const TimeSeries& context,
                  std::int64_t horizon, const DecodeOptions& opt);

// Substitutes ground truth for one stream (or both). truth is the eventized
// future segment, window 0 = first forecast window; the event count follows
// the truth events that start inside the horizon.
Forecast forecast_oracle(const NetBurstModel& m, const TimeSeries& context,
                         std::int64_t horizon, OracleStream oracle,
                         const EventSequence& truth, const DecodeOptions& opt);

// Concatenation of the two models' mean-pooled hidden states over the
// series' token streams.
std::vector<double> embed_series(const NetBurstModel& m,
                                 const TimeSeries& series);

}  // namespace netburst
