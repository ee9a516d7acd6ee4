#include "netburst/baselines.hpp"

namespace netburst {

TimeSeries zero_forecast(std::int64_t horizon, double window_ms) {
  if (horizon < 0) throw ConfigError("horizon must be >= 0");
  TimeSeries s;
  s.window_ms = window_ms;
  s.values.assign(static_cast<std::size_t>(horizon), 0.0);
  return s;
}

TimeSeries persistence_forecast(const TimeSeries& context,
                                std::int64_t horizon) {
  if (horizon < 0) throw ConfigError("horizon must be >= 0");
  if (context.values.empty())
    throw DataError("persistence_forecast: empty context");
  TimeSeries s;
  s.window_ms = context.window_ms;
  s.start_ns = context.start_ns +
               static_cast<std::int64_t>(context.values.size()) * context.window_ns();
  s.values.assign(static_cast<std::size_t>(horizon), context.values.back());
  return s;
}

namespace {

std::vector<int> tokenize_series(const Codebook& cb, const TimeSeries& s) {
  std::vector<int> out;
  out.reserve(s.values.size());
  for (double v : s.values) out.push_back(cb.encode(v));
  return out;
}

}  // namespace

RawTokenForecaster raw_fit(const std::vector<TimeSeries>& train_series,
                           const std::vector<TimeSeries>& val_series,
                           BinScheme scheme, int bins, const ModelConfig& cfg) {
  if (train_series.empty()) throw DataError("raw_fit: no training series");
  std::vector<double> pooled;
  for (const TimeSeries& s : train_series)
    pooled.insert(pooled.end(), s.values.begin(), s.values.end());

  RawTokenForecaster f;
  f.cb = scheme == BinScheme::uniform ? fit_uniform(pooled, bins)
                                      : fit_quantile(pooled, bins);

  std::vector<std::vector<int>> train_seqs, val_seqs;
  for (const TimeSeries& s : train_series)
    train_seqs.push_back(tokenize_series(f.cb, s));
  for (const TimeSeries& s : val_series)
    val_seqs.push_back(tokenize_series(f.cb, s));

  ModelConfig mc = cfg;
  mc.vocab = f.cb.bins();
  auto [model, report] = train(mc, train_seqs, val_seqs);
  (void)report;
  f.model = std::move(model);
  return f;
}

TimeSeries raw_forecast(const RawTokenForecaster& f, const TimeSeries& context,
                        std::int64_t horizon, const GenMode& mode) {
  if (horizon < 0) throw ConfigError("horizon must be >= 0");
  if (context.values.empty()) throw DataError("raw_forecast: empty context");
  TimeSeries out;
  out.window_ms = context.window_ms;
  out.start_ns = context.start_ns +
                 static_cast<std::int64_t>(context.values.size()) * context.window_ns();
  if (horizon == 0) return out;
  std::vector<int> ctx = tokenize_series(f.cb, context);
  std::vector<int> tokens = f.model.generate(ctx, static_cast<int>(horizon), mode);
  out.values.reserve(tokens.size());
  for (int t : tokens) out.values.push_back(f.cb.decode(t));
  return out;
}

std::vector<double> raw_embed(const RawTokenForecaster& f,
                              const TimeSeries& series) {
  if (series.values.empty()) throw DataError("raw_embed: empty series");
  return f.model.embed(tokenize_series(f.cb, series));
}

}  // namespace netburst
