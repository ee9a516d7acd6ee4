#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "netburst/eventize.hpp"
#include "netburst/rng.hpp"
#include "netburst/series.hpp"

using namespace netburst;

namespace {

TimeSeries make_series(std::vector<double> values) {
  TimeSeries s;
  s.window_ms = 100.0;
  s.values = std::move(values);
  return s;
}

TimeSeries random_spiky(Rng& rng, std::size_t len, double p_active) {
  std::vector<double> v(len, 0.0);
  for (std::size_t t = 0; t < len; ++t)
    if (rng.uniform() < p_active) v[t] = std::floor(rng.uniform(1.0, 1000.0));
  return make_series(std::move(v));
}

}  // namespace

TEST_CASE("eventize matches the worked example") {
  EventSequence ev = eventize(make_series({0, 5, 7, 0, 0, 3, 0}), 2.0);
  REQUIRE(ev.size() == 2);
  CHECK(ev.spans[0].tau == 1);
  CHECK(ev.spans[0].rho == 2);
  CHECK(ev.spans[1].tau == 5);
  CHECK(ev.spans[1].rho == 5);
  CHECK(ev.ibg == std::vector<std::int64_t>{1, 4});
  CHECK(ev.bi == std::vector<double>{12, 3});
}

TEST_CASE("eventize edge cases") {
  CHECK(eventize(make_series({0, 0, 0}), 0.0).empty());
  CHECK(eventize(make_series({0, 0, 0}), 100.0).empty());

  EventSequence one = eventize(make_series({9}), 0.0);
  REQUIRE(one.size() == 1);
  CHECK(one.ibg[0] == 0);  // burst in the very first window
  CHECK(one.bi[0] == 9);
  CHECK(one.spans[0].tau == 0);
  CHECK(one.spans[0].rho == 0);
}

TEST_CASE("reconstruct places spikes at accumulated starts") {
  EventSequence ev;
  ev.window_ms = 100.0;
  ev.ibg = {1, 4};
  ev.bi = {12, 3};
  ev.spans = {{1, 1}, {5, 5}};
  CHECK(reconstruct(ev, 7).values ==
        std::vector<double>{0, 12, 0, 0, 0, 3, 0});

  EventSequence empty;
  empty.window_ms = 100.0;
  CHECK(reconstruct(empty, 5).values == std::vector<double>(5, 0.0));

  EventSequence first;
  first.window_ms = 100.0;
  first.ibg = {0};
  first.bi = {9};
  first.spans = {{0, 0}};
  CHECK(reconstruct(first, 1).values == std::vector<double>{9});
}

TEST_CASE("reconstruct drops events beyond the horizon") {
  EventSequence ev;
  ev.window_ms = 100.0;
  ev.ibg = {2, 3, 10};
  ev.bi = {1, 2, 3};
  ev.spans = {{2, 2}, {5, 5}, {15, 15}};
  CHECK(reconstruct(ev, 8).values ==
        std::vector<double>{0, 0, 1, 0, 0, 2, 0, 0});
}

TEST_CASE("decoded-stream reconstruction sums collisions") {
  // two decoded events landing in the same window add their intensities
  TimeSeries out = reconstruct_decoded({1.2, 0.3}, {10, 5}, 0.0, 0, 4, 100.0);
  CHECK(out.values == std::vector<double>{0, 15, 0, 0});
  // events resolving before the origin are dropped
  TimeSeries neg = reconstruct_decoded({1.0, 5.0}, {10, 5}, 0.0, 3, 5, 100.0);
  CHECK(neg.values == std::vector<double>{0, 0, 0, 5, 0});
}

TEST_CASE("round trip equals thresholding for single-window bursts") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    TimeSeries s = random_spiky(rng, 20 + rng.below(200), 0.25);
    for (std::size_t t = 1; t < s.values.size(); ++t)
      if (s.values[t] > 0 && s.values[t - 1] > 0) s.values[t] = 0.0;
    double t_act = (trial % 2 == 0) ? 0.0 : 250.0;
    EventSequence ev = eventize(s, t_act);
    TimeSeries rec =
        reconstruct(ev, static_cast<std::int64_t>(s.values.size()));
    CHECK(rec.values == threshold_series(s, t_act).values);
  }
}

TEST_CASE("per-burst mass conservation is exact on integer inputs") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(150, 0.0);
    for (std::size_t t = 0; t < v.size(); ++t)
      if (rng.uniform() < 0.6) v[t] = std::floor(rng.uniform(0.0, 1e6));
    TimeSeries s = make_series(std::move(v));
    EventSequence ev = eventize(s, 0.0);
    for (std::size_t k = 0; k < ev.size(); ++k) {
      double mass = 0.0;
      for (std::int64_t t = ev.spans[k].tau; t <= ev.spans[k].rho; ++t)
        mass += s.values[static_cast<std::size_t>(t)];
      CHECK(ev.bi[k] == mass);
    }
  }
}

TEST_CASE("reconstruction is nonzero exactly at burst starts") {
  Rng rng(13);
  TimeSeries s = random_spiky(rng, 400, 0.3);
  EventSequence ev = eventize(s, 100.0);
  TimeSeries rec = reconstruct(ev, static_cast<std::int64_t>(s.values.size()));
  std::vector<std::int64_t> starts;
  for (std::size_t t = 0; t < rec.values.size(); ++t)
    if (rec.values[t] != 0.0) starts.push_back(static_cast<std::int64_t>(t));
  std::vector<std::int64_t> taus;
  for (const BurstSpan& sp : ev.spans) taus.push_back(sp.tau);
  CHECK(starts == taus);
  for (std::size_t k = 0; k < ev.size(); ++k)
    CHECK(rec.values[static_cast<std::size_t>(ev.spans[k].tau)] == ev.bi[k]);
}

TEST_CASE("threshold monotonicity: count never grows on isolated spikes") {
  // Raising the threshold can split a multi-window run into several bursts,
  // so the count is only monotone when bursts are single-window.
  CHECK(eventize(make_series({5, 3, 5}), 0.0).size() == 1);
  CHECK(eventize(make_series({5, 3, 5}), 4.0).size() == 2);

  Rng rng(14);
  TimeSeries s = random_spiky(rng, 500, 0.4);
  for (std::size_t t = 1; t < s.values.size(); ++t)
    if (s.values[t] > 0 && s.values[t - 1] > 0) s.values[t] = 0.0;
  std::size_t prev = eventize(s, 0.0).size();
  for (double t : {10.0, 100.0, 400.0, 900.0}) {
    std::size_t k = eventize(s, t).size();
    CHECK(k <= prev);
    prev = k;
  }

  // the active-window bound holds regardless of burst widths
  TimeSeries dense = random_spiky(rng, 500, 0.7);
  for (double t : {0.0, 200.0, 800.0}) {
    std::size_t active = 0;
    for (double v : dense.values) active += v > t ? 1 : 0;
    CHECK(eventize(dense, t).size() <= active);
  }
}

TEST_CASE("events CSV round trip") {
  EventSequence ev = eventize(make_series({0, 5, 7, 0, 0, 3, 0}), 2.0);
  std::string path = "/tmp/netburst_test_events.csv";
  write_events_csv(ev, "svc", path);
  std::string key;
  EventSequence back = read_events_csv(path, &key);
  CHECK(key == "svc");
  CHECK(back.t_act == 2.0);
  CHECK(back.ibg == ev.ibg);
  CHECK(back.bi == ev.bi);
  std::remove(path.c_str());
  std::remove((path + ".meta.json").c_str());
}
