#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "netburst/common.hpp"

namespace netburst {

// One telemetry record: timestamp in nanoseconds since epoch, opaque entity
// key (service name, host address, subnet prefix, ...), byte count.
struct RawRecord {
  std::int64_t timestamp_ns = 0;
  std::string key;
  std::int64_t bytes = 0;
};

// Windowed byte-count series for one entity. values[t] covers
// [start_ns + t*window, start_ns + (t+1)*window).
struct TimeSeries {
  double window_ms = 1.0;
  std::int64_t start_ns = 0;
  std::vector<double> values;

  std::int64_t window_ns() const;
  std::size_t size() const { return values.size(); }
};

struct SplitSpec {
  double train_frac = 0.7;
  double val_frac = 0.1;
  double test_frac = 0.2;

  // each fraction in (0,1), sum == 1 within 1e-9
  void validate() const;
};

struct SplitResult {
  TimeSeries train;
  TimeSeries val;
  TimeSeries test;
};

// Bins records into per-key series sharing a common start (earliest
// timestamp floored to a window boundary) and length. Records may arrive in
// any order; output is independent of input order. Empty input -> empty map.
std::map<std::string, TimeSeries> aggregate_records(
    const std::vector<RawRecord>& records, double window_ms);

// Contiguous chronological partition: first floor(train*T) windows, then
// floor(val*T), then the remainder. Requires at least 10 windows.
SplitResult chronological_split(const TimeSeries& series,
                                const SplitSpec& spec);

// Zeroes every window with value <= t_act (strictly-greater rule, matching
// the eventizer).
TimeSeries threshold_series(const TimeSeries& series, double t_act);

// --- file formats -----------------------------------------------------------
// Trace CSV: header "timestamp_ns,key,bytes", one record per line.
// Series CSV: header "index,value" plus a JSON sidecar {key, start_ns,
// window_ms} at <path>.meta.json.

std::vector<RawRecord> read_trace_csv(const std::string& path);

void write_series_csv(const TimeSeries& s, const std::string& key,
                      const std::string& path);
TimeSeries read_series_csv(const std::string& path, std::string* key_out);

}  // namespace netburst
