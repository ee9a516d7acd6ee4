#include "netburst/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "netburst/rng.hpp"

namespace netburst {

void BurstyConfig::validate() const {
  if (!(alpha_gap > 0.0) || !(alpha_bi > 0.0))
    throw ConfigError("pareto tail indices must be > 0");
  if (!(xm_gap > 0.0) || !(xm_bi > 0.0))
    throw ConfigError("pareto scale minima must be > 0");
  if (n_events < 1) throw ConfigError("n_events must be >= 1");
  if (!(burst_len_p > 0.0) || burst_len_p > 1.0)
    throw ConfigError("burst_len_p must lie in (0,1]");
  if (!(window_ms > 0.0)) throw ConfigError("window must be positive");
}

void SeasonalConfig::validate() const {
  if (period < 2) throw ConfigError("seasonal period must be >= 2");
  if (length < 1) throw ConfigError("seasonal length must be >= 1");
  if (!(window_ms > 0.0)) throw ConfigError("window must be positive");
  if (offset < 0.0 || amplitude < 0.0 || noise_sd < 0.0)
    throw ConfigError("seasonal parameters must be non-negative");
}

std::vector<double> pareto_sample(double alpha, double xm, std::uint64_t seed,
                                  std::size_t n) {
  if (!(alpha > 0.0) || !(xm > 0.0))
    throw ConfigError("pareto_sample: alpha and xm must be > 0");
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.pareto(alpha, xm));
  return out;
}

std::pair<TimeSeries, EventSequence> gen_bursty(const BurstyConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  std::vector<std::int64_t> gaps, durations;
  std::vector<double> intensities;
  gaps.reserve(static_cast<std::size_t>(cfg.n_events));
  std::int64_t prev_duration = 0;
  for (int k = 0; k < cfg.n_events; ++k) {
    std::int64_t dur = rng.geometric(cfg.burst_len_p);
    std::int64_t gap;
    do {  // a gap <= previous duration would merge or overlap the bursts
      gap = static_cast<std::int64_t>(std::ceil(rng.pareto(cfg.alpha_gap, cfg.xm_gap)));
    } while (k > 0 && gap <= prev_duration);
    gaps.push_back(gap);
    durations.push_back(dur);
    intensities.push_back(rng.pareto(cfg.alpha_bi, cfg.xm_bi));
    prev_duration = dur;
  }

  EventSequence ev;
  ev.t_act = 0.0;
  ev.window_ms = cfg.window_ms;
  std::int64_t tau = 0;
  std::int64_t end = 0;
  for (int k = 0; k < cfg.n_events; ++k) {
    tau += gaps[static_cast<std::size_t>(k)];
    std::int64_t rho = tau + durations[static_cast<std::size_t>(k)] - 1;
    ev.ibg.push_back(gaps[static_cast<std::size_t>(k)]);
    ev.spans.push_back({tau, rho});
    end = rho;
  }

  TimeSeries series;
  series.window_ms = cfg.window_ms;
  series.values.assign(static_cast<std::size_t>(end) + 2, 0.0);  // one idle tail window
  for (int k = 0; k < cfg.n_events; ++k) {
    const BurstSpan& sp = ev.spans[static_cast<std::size_t>(k)];
    std::int64_t dur = sp.rho - sp.tau + 1;
    double per_window = intensities[static_cast<std::size_t>(k)] /
                        static_cast<double>(dur);
    for (std::int64_t t = sp.tau; t <= sp.rho; ++t)
      series.values[static_cast<std::size_t>(t)] = per_window;
    // planted bi is the sum of the laid window values, in index order, so it
    // matches eventize() bit-for-bit even when per_window*dur != intensity
    double mass = 0.0;
    for (std::int64_t t = sp.tau; t <= sp.rho; ++t)
      mass += series.values[static_cast<std::size_t>(t)];
    ev.bi.push_back(mass);
  }
  return {std::move(series), std::move(ev)};
}

TimeSeries gen_seasonal(const SeasonalConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  TimeSeries s;
  s.window_ms = cfg.window_ms;
  s.values.reserve(static_cast<std::size_t>(cfg.length));
  const double two_pi = 2.0 * 3.141592653589793238462643;
  for (std::int64_t t = 0; t < cfg.length; ++t) {
    double v = cfg.offset +
               cfg.amplitude * std::sin(two_pi * static_cast<double>(t) /
                                        static_cast<double>(cfg.period));
    if (cfg.noise_sd > 0.0) v += cfg.noise_sd * rng.gaussian();
    s.values.push_back(std::max(0.0, v));
  }
  return s;
}

std::vector<TimeSeries> aggregate_groups(const std::vector<TimeSeries>& series,
                                         int group_size, std::uint64_t seed) {
  if (group_size < 1) throw ConfigError("group_size must be >= 1");
  if (series.empty()) return {};
  std::size_t len = series.front().values.size();
  for (const TimeSeries& s : series)
    if (s.values.size() != len)
      throw DataError("aggregate_groups requires equal-length series");

  std::vector<std::size_t> order(series.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i)  // Fisher-Yates
    std::swap(order[i - 1], order[rng.below(i)]);

  std::vector<TimeSeries> out;
  for (std::size_t g = 0; g < order.size();
       g += static_cast<std::size_t>(group_size)) {
    TimeSeries agg;
    agg.window_ms = series.front().window_ms;
    agg.start_ns = series.front().start_ns;
    agg.values.assign(len, 0.0);
    std::size_t hi = std::min(order.size(), g + static_cast<std::size_t>(group_size));
    for (std::size_t i = g; i < hi; ++i)
      for (std::size_t t = 0; t < len; ++t)
        agg.values[t] += series[order[i]].values[t];
    out.push_back(std::move(agg));
  }
  return out;
}

TimeSeries add_pareto_noise(const TimeSeries& series, double alpha, double xm,
                            std::uint64_t seed) {
  if (!(alpha > 0.0) || !(xm > 0.0))
    throw ConfigError("noise parameters must be > 0");
  Rng rng(seed);
  TimeSeries out = series;
  for (double& v : out.values) v += rng.pareto(alpha, xm);
  return out;
}

}  // namespace netburst
