#include "netburst/series.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace netburst {

std::int64_t TimeSeries::window_ns() const {
  return static_cast<std::int64_t>(std::llround(window_ms * 1e6));
}

void SplitSpec::validate() const {
  auto in_range = [](double f) { return f > 0.0 && f < 1.0; };
  if (!in_range(train_frac) || !in_range(val_frac) || !in_range(test_frac))
    throw ConfigError("split fractions must each lie in (0,1)");
  double sum = train_frac + val_frac + test_frac;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split fractions sum to " + fmt_g17(sum) +
                      ", expected 1");
}

std::map<std::string, TimeSeries> aggregate_records(
    const std::vector<RawRecord>& records, double window_ms) {
  if (window_ms <= 0.0) throw ConfigError("window must be positive");
  std::map<std::string, TimeSeries> out;
  if (records.empty()) return out;

  std::int64_t window_ns =
      static_cast<std::int64_t>(std::llround(window_ms * 1e6));
  if (window_ns <= 0) throw ConfigError("window must be at least 1ns");

  std::int64_t min_ts = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_ts = std::numeric_limits<std::int64_t>::min();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RawRecord& r = records[i];
    if (r.bytes < 0)
      throw DataError("record " + std::to_string(i + 1) + " (key '" + r.key +
                      "') has negative bytes");
    if (r.timestamp_ns < 0)
      throw DataError("record " + std::to_string(i + 1) + " (key '" + r.key +
                      "') has negative timestamp");
    min_ts = std::min(min_ts, r.timestamp_ns);
    max_ts = std::max(max_ts, r.timestamp_ns);
  }

  std::int64_t start = (min_ts / window_ns) * window_ns;
  std::size_t length =
      static_cast<std::size_t>((max_ts - start) / window_ns) + 1;

  for (const RawRecord& r : records) {
    TimeSeries& s = out[r.key];
    if (s.values.empty()) {
      s.window_ms = window_ms;
      s.start_ns = start;
      s.values.assign(length, 0.0);
    }
    std::size_t t = static_cast<std::size_t>((r.timestamp_ns - start) / window_ns);
    s.values[t] += static_cast<double>(r.bytes);
  }
  return out;
}

SplitResult chronological_split(const TimeSeries& series,
                                const SplitSpec& spec) {
  spec.validate();
  std::size_t n = series.values.size();
  if (n < 10)
    throw DataError("series too short to split: " + std::to_string(n) +
                    " windows, need at least 10");

  std::size_t n_train = static_cast<std::size_t>(
      std::floor(spec.train_frac * static_cast<double>(n)));
  std::size_t n_val = static_cast<std::size_t>(
      std::floor(spec.val_frac * static_cast<double>(n)));

  auto slice = [&](std::size_t from, std::size_t to) {
    TimeSeries s;
    s.window_ms = series.window_ms;
    s.start_ns = series.start_ns +
                 static_cast<std::int64_t>(from) * series.window_ns();
    s.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(from),
                    series.values.begin() + static_cast<std::ptrdiff_t>(to));
    return s;
  };

  SplitResult r;
  r.train = slice(0, n_train);
  r.val = slice(n_train, n_train + n_val);
  r.test = slice(n_train + n_val, n);
  return r;
}

TimeSeries threshold_series(const TimeSeries& series, double t_act) {
  if (t_act < 0.0) throw ConfigError("activity threshold must be >= 0");
  TimeSeries out = series;
  for (double& v : out.values)
    if (!(v > t_act)) v = 0.0;
  return out;
}

// --- CSV / sidecar io --------------------------------------------------------

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  return f;
}

}  // namespace

std::vector<RawRecord> read_trace_csv(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw DataError(path + ": empty trace file");
  if (line != "timestamp_ns,key,bytes")
    throw DataError(path + ": expected header 'timestamp_ns,key,bytes', got '" +
                    line + "'");
  std::vector<RawRecord> records;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t c1 = line.find(',');
    std::size_t c2 = line.rfind(',');
    if (c1 == std::string::npos || c2 == c1)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected 3 comma-separated fields");
    RawRecord r;
    try {
      r.timestamp_ns = std::stoll(line.substr(0, c1));
      r.key = line.substr(c1 + 1, c2 - c1 - 1);
      r.bytes = std::stoll(line.substr(c2 + 1));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed record '" + line + "'");
    }
    if (r.bytes < 0)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": negative bytes");
    if (r.timestamp_ns < 0)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": negative timestamp");
    records.push_back(std::move(r));
  }
  return records;
}

void write_series_csv(const TimeSeries& s, const std::string& key,
                      const std::string& path) {
  std::ofstream f = open_out(path);
  f << "index,value\n";
  for (std::size_t t = 0; t < s.values.size(); ++t)
    f << t << ',' << fmt_g17(s.values[t]) << '\n';

  nlohmann::json meta;
  meta["key"] = key;
  meta["start_ns"] = s.start_ns;
  meta["window_ms"] = s.window_ms;
  std::ofstream mf = open_out(path + ".meta.json");
  mf << meta.dump(2) << '\n';
}

TimeSeries read_series_csv(const std::string& path, std::string* key_out) {
  std::ifstream f = open_in(path);
  std::string line;
  if (!std::getline(f, line) || line != "index,value")
    throw DataError(path + ": expected header 'index,value'");
  TimeSeries s;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t c = line.find(',');
    if (c == std::string::npos)
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed row");
    try {
      s.values.push_back(std::stod(line.substr(c + 1)));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed row");
    }
  }

  std::ifstream mf = open_in(path + ".meta.json");
  nlohmann::json meta = nlohmann::json::parse(mf, nullptr, true);
  s.start_ns = meta.at("start_ns").get<std::int64_t>();
  s.window_ms = meta.at("window_ms").get<double>();
  if (key_out) *key_out = meta.at("key").get<std::string>();
  return s;
}

}  // namespace netburst
