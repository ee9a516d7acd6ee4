#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "netburst/eventize.hpp"
#include "netburst/series.hpp"

namespace netburst {

// Heavy-tailed bursty telemetry: Pareto gaps and intensities, geometric burst
// durations, intensities spread uniformly over each burst's windows.
struct BurstyConfig {
  double alpha_gap = 1.5;
  double alpha_bi = 1.5;
  double xm_gap = 5.0;    // windows
  double xm_bi = 100.0;   // bytes
  int n_events = 100;
  double window_ms = 100.0;
  double burst_len_p = 1.0;  // geometric duration parameter; 1 => single-window
  std::uint64_t seed = 1;

  void validate() const;
};

// Smooth seasonal contrast regime: clipped sinusoid plus gaussian noise.
struct SeasonalConfig {
  std::int64_t period = 24;
  double amplitude = 10.0;
  double offset = 20.0;
  double noise_sd = 1.0;
  std::int64_t length = 1000;
  double window_ms = 100.0;
  std::uint64_t seed = 1;

  void validate() const;
};

// Inverse-CDF Pareto draws x = xm * (1-u)^(-1/alpha).
std::vector<double> pareto_sample(double alpha, double xm, std::uint64_t seed,
                                  std::size_t n);

// Returns the series together with the planted ground-truth events. Gaps are
// start-to-start; a drawn gap that would overlap or touch the previous burst
// is re-drawn, so eventize(series, 0) recovers the planted events exactly.
std::pair<TimeSeries, EventSequence> gen_bursty(const BurstyConfig& cfg);

TimeSeries gen_seasonal(const SeasonalConfig& cfg);

// Randomly partitions the (equal-length) series into groups of group_size
// (last group may be smaller) and sums element-wise within each group.
std::vector<TimeSeries> aggregate_groups(const std::vector<TimeSeries>& series,
                                         int group_size, std::uint64_t seed);

// Adds independent Pareto(alpha, xm) noise to every window. Sub-threshold at
// fine granularity, but group sums push it above activity thresholds; the
// transfer experiment thresholds it back out.
TimeSeries add_pareto_noise(const TimeSeries& series, double alpha, double xm,
                            std::uint64_t seed);

}  // namespace netburst
