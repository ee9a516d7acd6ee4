#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netburst/series.hpp"

namespace netburst {

// Inclusive window-index span [tau, rho] of one burst.
struct BurstSpan {
  std::int64_t tau = 0;
  std::int64_t rho = 0;
};

// Eventized form of a series: for burst k, ibg[k] is the start-to-start gap
// to the previous burst (ibg[0] is the first burst's start index, so 0 is
// legal only at position 0) and bi[k] the total bytes over its windows.
// Spans are kept for diagnostics; reconstruction uses only starts.
struct EventSequence {
  double t_act = 0.0;
  double window_ms = 1.0;
  std::vector<std::int64_t> ibg;
  std::vector<double> bi;
  std::vector<BurstSpan> spans;

  std::size_t size() const { return ibg.size(); }
  bool empty() const { return ibg.empty(); }
};

// A burst is a maximal run of consecutive windows with value strictly above
// t_act. An all-idle series yields an empty sequence.
EventSequence eventize(const TimeSeries& series, double t_act);

// Spike placement: accumulate gaps into absolute starts and assign each
// burst's full intensity to its starting window. Events beyond the horizon
// are dropped; events colliding in one window (possible for decoded streams)
// sum their intensities.
TimeSeries reconstruct(const EventSequence& events, std::int64_t horizon);

// Same placement rule for decoded real-valued streams: starts accumulate as
// reals offset by `anchor` and spikes land at floor(start) - origin. Used by
// the forecaster, where anchor is the last context burst start and origin the
// context length.
TimeSeries reconstruct_decoded(const std::vector<double>& gaps,
                               const std::vector<double>& intensities,
                               double anchor, std::int64_t origin,
                               std::int64_t horizon, double window_ms);

// Events CSV: header "ibg,bi" plus JSON sidecar {key, t_act, window_ms} at
// <path>.meta.json.
void write_events_csv(const EventSequence& ev, const std::string& key,
                      const std::string& path);
EventSequence read_events_csv(const std::string& path, std::string* key_out);

}  // namespace netburst
