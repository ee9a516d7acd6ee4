#pragma once

#include <cstdint>
#include <vector>

#include "netburst/codebook.hpp"
#include "netburst/model.hpp"
#include "netburst/series.hpp"

namespace netburst {

TimeSeries zero_forecast(std::int64_t horizon, double window_ms);

// Repeats the last context value over the horizon.
TimeSeries persistence_forecast(const TimeSeries& context,
                                std::int64_t horizon);

// Raw-window token model: one codebook (uniform or quantile) over raw window
// values and one autoregressive token model over the raw token stream. This
// is the in-repo stand-in for a Chronos-style forecaster and its
// quantile-binning variant.
struct RawTokenForecaster {
  Codebook cb;
  TokenModel model;
};

RawTokenForecaster raw_fit(const std::vector<TimeSeries>& train_series,
                           const std::vector<TimeSeries>& val_series,
                           BinScheme scheme, int bins, const ModelConfig& cfg);

// Tokenizes the context and decodes `horizon` tokens via centroids.
TimeSeries raw_forecast(const RawTokenForecaster& f, const TimeSeries& context,
                        std::int64_t horizon, const GenMode& mode);

// Mean-pooled hidden state over the series' raw token stream, the comparator
// for the event-centric embeddings.
std::vector<double> raw_embed(const RawTokenForecaster& f,
                              const TimeSeries& series);

}  // namespace netburst
