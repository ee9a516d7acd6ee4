#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "netburst/forecaster.hpp"
#include "netburst/rng.hpp"

using namespace netburst;

namespace {

// deterministic corpus: gaps alternate 5,9; intensities alternate 10,1000
TimeSeries pattern_series(int n_events) {
  TimeSeries s;
  s.window_ms = 100.0;
  std::int64_t tau = 0;
  std::vector<std::pair<std::int64_t, double>> bursts;
  for (int k = 0; k < n_events; ++k) {
    tau += (k % 2 == 0) ? 5 : 9;
    bursts.push_back({tau, (k % 2 == 0) ? 10.0 : 1000.0});
  }
  s.values.assign(static_cast<std::size_t>(tau) + 2, 0.0);
  for (auto [t, b] : bursts) s.values[static_cast<std::size_t>(t)] = b;
  return s;
}

NetBurstOptions pattern_options(std::uint64_t seed = 1) {
  NetBurstOptions opt;
  opt.ibg_bins = 8;
  opt.bi_bins = 8;
  ModelConfig mc;
  mc.context = 16;
  mc.layers = 1;
  mc.hidden = 32;
  mc.heads = 2;
  mc.learning_rate = 3e-3;
  mc.batch = 16;
  mc.max_steps = 300;
  mc.eval_every = 50;
  mc.patience = 10;
  mc.seed = seed;
  opt.ibg_model = mc;
  mc.seed = seed + 1;
  opt.bi_model = mc;
  return opt;
}

NetBurstModel fit_pattern_model() {
  std::vector<TimeSeries> train, val;
  for (int i = 0; i < 8; ++i) train.push_back(pattern_series(60));
  val.push_back(pattern_series(20));
  return fit_netburst(train, val, 0.0, pattern_options());
}

}  // namespace

TEST_CASE("fitting on a deterministic pattern learns the alternation") {
  NetBurstModel m = fit_pattern_model();

  // the two gap values quantize to their exact centroids
  CHECK(m.ibg_cb.decode(m.ibg_cb.encode(5.0)) == 5.0);
  CHECK(m.ibg_cb.decode(m.ibg_cb.encode(9.0)) == 9.0);
  CHECK(m.bi_cb.decode(m.bi_cb.encode(10.0)) == 10.0);
  CHECK(m.bi_cb.decode(m.bi_cb.encode(1000.0)) == 1000.0);

  // greedy gap continuation from [5,9,5] keeps alternating
  std::vector<int> ctx{m.ibg_cb.encode(5), m.ibg_cb.encode(9), m.ibg_cb.encode(5)};
  std::vector<int> cont = m.ibg_model.generate(ctx, 6, GenMode::Greedy());
  for (int i = 0; i < 6; ++i)
    CHECK(cont[static_cast<std::size_t>(i)] ==
          (i % 2 == 0 ? m.ibg_cb.encode(9) : m.ibg_cb.encode(5)));
}

TEST_CASE("fit errors") {
  std::vector<TimeSeries> train{pattern_series(30)};
  CHECK_THROWS_WITH_AS(fit_netburst(train, {}, 1e9, pattern_options()),
                       doctest::Contains("threshold too high"), DataError);
  CHECK_THROWS_AS(fit_netburst({}, {}, 0.0, pattern_options()), DataError);
}

TEST_CASE("fit is deterministic under fixed seeds") {
  NetBurstModel a = fit_pattern_model();
  NetBurstModel b = fit_pattern_model();
  CHECK(a.ibg_model.params() == b.ibg_model.params());
  CHECK(a.bi_model.params() == b.bi_model.params());
  CHECK(a.ibg_cb.boundaries == b.ibg_cb.boundaries);
}

TEST_CASE("forecast continues the pattern exactly") {
  NetBurstModel m = fit_pattern_model();
  TimeSeries full = pattern_series(60);
  // cut right after the 40th burst so the continuation is known
  EventSequence ev = eventize(full, 0.0);
  std::int64_t cut = ev.spans[39].rho + 1;
  TimeSeries context;
  context.window_ms = full.window_ms;
  context.values.assign(full.values.begin(),
                        full.values.begin() + static_cast<std::ptrdiff_t>(cut));
  std::int64_t horizon = 40;

  DecodeOptions opt;
  opt.mode = GenMode::Greedy();
  Forecast fc = forecast(m, context, horizon, opt);
  REQUIRE(fc.series.values.size() == static_cast<std::size_t>(horizon));

  std::vector<double> expected(static_cast<std::size_t>(horizon), 0.0);
  for (std::size_t t = 0; t < expected.size(); ++t)
    expected[t] = full.values[static_cast<std::size_t>(cut + static_cast<std::int64_t>(t))];
  CHECK(fc.series.values == expected);

  // decoded audit streams expose tokens and centroid values
  CHECK(fc.gaps.size() == fc.intensities.size());
  CHECK(fc.ibg_tokens.size() == fc.gaps.size());
  for (double g : fc.gaps) CHECK((g == 5.0 || g == 9.0));
}

TEST_CASE("forecast validates its inputs") {
  NetBurstModel m = fit_pattern_model();
  TimeSeries idle;
  idle.window_ms = 100.0;
  idle.values.assign(50, 0.0);
  CHECK_THROWS_AS(forecast(m, idle, 10, DecodeOptions{}), DataError);
  CHECK_THROWS_AS(forecast(m, pattern_series(20), 0, DecodeOptions{}),
                  ConfigError);
}

TEST_CASE("forecast sampling is deterministic per seed") {
  NetBurstModel m = fit_pattern_model();
  TimeSeries context = pattern_series(40);
  DecodeOptions opt;
  opt.mode = GenMode::Sample(1.0, 77);
  Forecast a = forecast(m, context, 50, opt);
  Forecast b = forecast(m, context, 50, opt);
  CHECK(a.series.values == b.series.values);
  CHECK(a.ibg_tokens == b.ibg_tokens);
  opt.mode.seed = 78;
  Forecast c = forecast(m, context, 50, opt);
  CHECK(a.series.values.size() == c.series.values.size());
}

TEST_CASE("oracle substitution") {
  NetBurstModel m = fit_pattern_model();
  TimeSeries full = pattern_series(60);
  EventSequence ev = eventize(full, 0.0);
  std::int64_t cut = ev.spans[39].rho + 1;
  TimeSeries context;
  context.window_ms = full.window_ms;
  context.values.assign(full.values.begin(),
                        full.values.begin() + static_cast<std::ptrdiff_t>(cut));
  std::int64_t horizon = 60;
  TimeSeries future;
  future.window_ms = full.window_ms;
  future.values.assign(
      full.values.begin() + static_cast<std::ptrdiff_t>(cut),
      full.values.begin() + static_cast<std::ptrdiff_t>(cut + horizon));
  EventSequence truth = eventize(future, 0.0);
  REQUIRE_FALSE(truth.empty());

  DecodeOptions opt;
  opt.mode = GenMode::Greedy();

  SUBCASE("oracle timing places spikes exactly at true starts") {
    Forecast fc = forecast_oracle(m, context, horizon, OracleStream::ibg, truth, opt);
    std::vector<std::int64_t> got, want;
    for (std::size_t t = 0; t < fc.series.values.size(); ++t)
      if (fc.series.values[t] != 0.0) got.push_back(static_cast<std::int64_t>(t));
    std::int64_t tau = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      tau += truth.ibg[k];
      if (tau < horizon) want.push_back(tau);
    }
    CHECK(got == want);
  }

  SUBCASE("oracle magnitudes carry exact truth mass") {
    Forecast fc = forecast_oracle(m, context, horizon, OracleStream::bi, truth, opt);
    // the pattern model decodes gaps perfectly, so this equals the truth
    CHECK(fc.series.values == future.values);
    CHECK(fc.intensities == truth.bi);
  }

  SUBCASE("double oracle reproduces spike-placed truth exactly") {
    Forecast fc = forecast_oracle(m, context, horizon, OracleStream::both, truth, opt);
    CHECK(fc.series.values == reconstruct(truth, horizon).values);
  }

  SUBCASE("tokenized oracle only adds quantization error") {
    opt.tokenized_oracle = true;
    Forecast fc = forecast_oracle(m, context, horizon, OracleStream::both, truth, opt);
    // expected: truth events inside the horizon, pushed through the codebooks
    std::vector<double> g, b;
    std::int64_t tau = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      tau += truth.ibg[k];
      if (tau >= horizon) break;
      g.push_back(m.ibg_cb.decode(
          m.ibg_cb.encode(static_cast<double>(truth.ibg[k]))));
      b.push_back(m.bi_cb.decode(m.bi_cb.encode(truth.bi[k])));
    }
    CHECK(fc.series.values ==
          reconstruct_decoded(g, b, 0.0, 0, horizon, m.window_ms).values);
    // interior gaps hit the {5,9} support exactly; only the segment-relative
    // first gap may clamp
    for (std::size_t k = 1; k < g.size(); ++k)
      CHECK(g[k] == static_cast<double>(truth.ibg[k]));
    CHECK(b == std::vector<double>(truth.bi.begin(),
                                   truth.bi.begin() +
                                       static_cast<std::ptrdiff_t>(b.size())));
  }
}

TEST_CASE("embed_series contract") {
  NetBurstModel m = fit_pattern_model();
  TimeSeries s = pattern_series(30);
  std::vector<double> e = embed_series(m, s);
  CHECK(e.size() == static_cast<std::size_t>(m.ibg_model.config().hidden +
                                             m.bi_model.config().hidden));
  CHECK(embed_series(m, s) == e);

  TimeSeries idle;
  idle.window_ms = 100.0;
  idle.values.assign(20, 0.0);
  CHECK_THROWS_AS(embed_series(m, idle), DataError);
}

TEST_CASE("model directory round trip preserves behavior") {
  NetBurstModel m = fit_pattern_model();
  std::string dir = "/tmp/netburst_test_model_dir";
  m.save(dir);
  NetBurstModel back = NetBurstModel::load(dir);
  CHECK(back.t_act == m.t_act);
  CHECK(back.ibg_cb.boundaries == m.ibg_cb.boundaries);
  CHECK(back.ibg_model.params() == m.ibg_model.params());
  CHECK(back.bi_model.params() == m.bi_model.params());
  CHECK(back.mean_train_ibg == m.mean_train_ibg);

  TimeSeries context = pattern_series(40);
  DecodeOptions opt;
  opt.mode = GenMode::Greedy();
  CHECK(forecast(back, context, 30, opt).series.values ==
        forecast(m, context, 30, opt).series.values);
}
