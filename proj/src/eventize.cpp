#include "netburst/eventize.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace netburst {

EventSequence eventize(const TimeSeries& series, double t_act) {
  if (t_act < 0.0) throw ConfigError("activity threshold must be >= 0");
  EventSequence ev;
  ev.t_act = t_act;
  ev.window_ms = series.window_ms;

  const std::vector<double>& v = series.values;
  std::int64_t n = static_cast<std::int64_t>(v.size());
  std::int64_t prev_tau = 0;
  std::int64_t t = 0;
  while (t < n) {
    if (v[static_cast<std::size_t>(t)] > t_act) {
      std::int64_t tau = t;
      double mass = 0.0;
      while (t < n && v[static_cast<std::size_t>(t)] > t_act) {
        mass += v[static_cast<std::size_t>(t)];
        ++t;
      }
      std::int64_t rho = t - 1;
      // first gap is the start index itself; later gaps are start-to-start
      ev.ibg.push_back(ev.spans.empty() ? tau : tau - prev_tau);
      ev.bi.push_back(mass);
      ev.spans.push_back({tau, rho});
      prev_tau = tau;
    } else {
      ++t;
    }
  }
  return ev;
}

TimeSeries reconstruct(const EventSequence& events, std::int64_t horizon) {
  if (horizon < 0) throw ConfigError("horizon must be >= 0");
  TimeSeries out;
  out.window_ms = events.window_ms;
  out.values.assign(static_cast<std::size_t>(horizon), 0.0);
  std::int64_t tau = 0;
  for (std::size_t k = 0; k < events.ibg.size(); ++k) {
    tau += events.ibg[k];
    if (tau >= horizon) break;  // gaps are positive, later events only move right
    out.values[static_cast<std::size_t>(tau)] += events.bi[k];
  }
  return out;
}

TimeSeries reconstruct_decoded(const std::vector<double>& gaps,
                               const std::vector<double>& intensities,
                               double anchor, std::int64_t origin,
                               std::int64_t horizon, double window_ms) {
  if (horizon < 0) throw ConfigError("horizon must be >= 0");
  TimeSeries out;
  out.window_ms = window_ms;
  out.values.assign(static_cast<std::size_t>(horizon), 0.0);
  double tau = anchor;
  std::size_t n = std::min(gaps.size(), intensities.size());
  for (std::size_t k = 0; k < n; ++k) {
    tau += gaps[k];
    std::int64_t idx = static_cast<std::int64_t>(std::floor(tau)) - origin;
    if (idx < 0) continue;  // decoded event falls inside the context range
    if (idx >= horizon) continue;
    out.values[static_cast<std::size_t>(idx)] += intensities[k];
  }
  return out;
}

void write_events_csv(const EventSequence& ev, const std::string& key,
                      const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  f << "ibg,bi\n";
  for (std::size_t k = 0; k < ev.ibg.size(); ++k)
    f << ev.ibg[k] << ',' << fmt_g17(ev.bi[k]) << '\n';

  nlohmann::json meta;
  meta["key"] = key;
  meta["t_act"] = ev.t_act;
  meta["window_ms"] = ev.window_ms;
  std::ofstream mf(path + ".meta.json");
  if (!mf) throw DataError("cannot write " + path + ".meta.json");
  mf << meta.dump(2) << '\n';
}

EventSequence read_events_csv(const std::string& path, std::string* key_out) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line != "ibg,bi")
    throw DataError(path + ": expected header 'ibg,bi'");
  EventSequence ev;
  std::size_t lineno = 1;
  std::int64_t tau = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t c = line.find(',');
    if (c == std::string::npos)
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed row");
    try {
      ev.ibg.push_back(std::stoll(line.substr(0, c)));
      ev.bi.push_back(std::stod(line.substr(c + 1)));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed row");
    }
    tau += ev.ibg.back();
    ev.spans.push_back({tau, tau});  // durations are not carried in the file
  }

  std::ifstream mf(path + ".meta.json");
  if (!mf) throw DataError("cannot open " + path + ".meta.json");
  nlohmann::json meta = nlohmann::json::parse(mf, nullptr, true);
  ev.t_act = meta.at("t_act").get<double>();
  ev.window_ms = meta.at("window_ms").get<double>();
  if (key_out) *key_out = meta.at("key").get<std::string>();
  return ev;
}

}  // namespace netburst
