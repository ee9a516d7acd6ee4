#include "netburst/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "netburst/rng.hpp"

namespace netburst {

namespace {

std::vector<int> encode_all(const Codebook& cb, const std::vector<double>& xs) {
  std::vector<int> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(cb.encode(x));
  return out;
}

std::vector<double> ibg_as_double(const EventSequence& ev) {
  std::vector<double> out;
  out.reserve(ev.ibg.size());
  for (std::int64_t g : ev.ibg) out.push_back(static_cast<double>(g));
  return out;
}

std::vector<int> tail(std::vector<int> v, std::size_t keep) {
  if (v.size() > keep) v.erase(v.begin(), v.end() - static_cast<std::ptrdiff_t>(keep));
  return v;
}

}  // namespace

NetBurstModel fit_netburst(const std::vector<TimeSeries>& train_series,
                           const std::vector<TimeSeries>& val_series,
                           double t_act, const NetBurstOptions& opt) {
  if (train_series.empty()) throw DataError("fit: no training series");
  double window_ms = train_series.front().window_ms;
  for (const TimeSeries& s : train_series)
    if (s.window_ms != window_ms)
      throw DataError("fit: training series disagree on window size");

  std::vector<EventSequence> train_ev, val_ev;
  std::vector<double> all_gaps, all_bis;
  std::size_t max_events = 0;
  for (const TimeSeries& s : train_series) {
    EventSequence ev = eventize(s, t_act);
    max_events = std::max(max_events, ev.size());
    for (std::int64_t g : ev.ibg) all_gaps.push_back(static_cast<double>(g));
    for (double b : ev.bi) all_bis.push_back(b);
    train_ev.push_back(std::move(ev));
  }
  if (all_gaps.empty())
    throw DataError("fit: no events in any training series, threshold too high (t_act=" +
                    fmt_g17(t_act) + ")");
  if (max_events < 2)
    throw DataError("fit: no training series produces >= 2 events at t_act=" +
                    fmt_g17(t_act));
  for (const TimeSeries& s : val_series) val_ev.push_back(eventize(s, t_act));

  NetBurstModel m;
  m.t_act = t_act;
  m.window_ms = window_ms;
  m.max_context_events = opt.max_context_events;
  m.ibg_cb = fit_quantile(all_gaps, opt.ibg_bins, opt.centroid);
  m.bi_cb = fit_quantile(all_bis, opt.bi_bins, opt.centroid);
  m.mean_train_ibg = kahan_mean(all_gaps);

  auto tokenize = [](const std::vector<EventSequence>& evs, const Codebook& cb,
                     bool gaps) {
    std::vector<std::vector<int>> seqs;
    for (const EventSequence& ev : evs) {
      if (ev.empty()) continue;
      seqs.push_back(gaps ? encode_all(cb, ibg_as_double(ev))
                          : encode_all(cb, ev.bi));
    }
    return seqs;
  };

  ModelConfig ibg_cfg = opt.ibg_model;
  ibg_cfg.vocab = m.ibg_cb.bins();
  ModelConfig bi_cfg = opt.bi_model;
  bi_cfg.vocab = m.bi_cb.bins();

  auto [ibg_model, ibg_report] =
      train(ibg_cfg, tokenize(train_ev, m.ibg_cb, true),
            tokenize(val_ev, m.ibg_cb, true));
  auto [bi_model, bi_report] =
      train(bi_cfg, tokenize(train_ev, m.bi_cb, false),
            tokenize(val_ev, m.bi_cb, false));
  m.ibg_model = std::move(ibg_model);
  m.ibg_report = std::move(ibg_report);
  m.bi_model = std::move(bi_model);
  m.bi_report = std::move(bi_report);
  return m;
}

namespace {

struct DecodedStream {
  std::vector<int> tokens;
  std::vector<double> values;
};

// Decodes gap tokens until the accumulated start index reaches
// origin+horizon, starting from the last context burst start.
DecodedStream decode_gaps(const NetBurstModel& m, std::vector<int> window,
                          double anchor, std::int64_t origin,
                          std::int64_t horizon, const DecodeOptions& opt,
                          Rng& rng) {
  DecodedStream out;
  double cap_d = opt.max_events_factor * static_cast<double>(horizon) /
                 std::max(1.0, m.mean_train_ibg);
  std::size_t cap = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(cap_d)));
  double tau = anchor;
  while (out.tokens.size() < cap) {
    std::vector<double> dist = m.ibg_model.next_token_dist(window);
    int tok = sample_from_dist(dist, opt.mode, rng);
    double gap = m.ibg_cb.decode(tok);
    out.tokens.push_back(tok);
    out.values.push_back(gap);
    tau += gap;
    window.push_back(tok);
    if (window.size() > static_cast<std::size_t>(m.ibg_model.config().context))
      window.erase(window.begin());
    if (tau >= static_cast<double>(origin + horizon)) break;
  }
  return out;
}

DecodedStream decode_intensities(const NetBurstModel& m, std::vector<int> window,
                                 std::size_t count, const DecodeOptions& opt,
                                 Rng& rng) {
  DecodedStream out;
  while (out.tokens.size() < count) {
    std::vector<double> dist = m.bi_model.next_token_dist(window);
    int tok = sample_from_dist(dist, opt.mode, rng);
    out.tokens.push_back(tok);
    out.values.push_back(m.bi_cb.decode(tok));
    window.push_back(tok);
    if (window.size() > static_cast<std::size_t>(m.bi_model.config().context))
      window.erase(window.begin());
  }
  return out;
}

EventSequence context_events(const NetBurstModel& m, const TimeSeries& context) {
  EventSequence ev = eventize(context, m.t_act);
  if (ev.empty())
    throw DataError(
        "forecast: context has no events at t_act=" + fmt_g17(m.t_act) +
        "; a lower activity threshold may be needed");
  return ev;
}

}  // namespace

Forecast forecast(const NetBurstModel& m, const TimeSeries& context,
                  std::int64_t horizon, const DecodeOptions& opt) {
  if (horizon <= 0) throw ConfigError("forecast: horizon must be > 0");
  EventSequence ev = context_events(m, context);

  std::size_t keep = static_cast<std::size_t>(m.max_context_events);
  std::vector<int> ibg_ctx = tail(encode_all(m.ibg_cb, ibg_as_double(ev)), keep);
  std::vector<int> bi_ctx = tail(encode_all(m.bi_cb, ev.bi), keep);

  double anchor = static_cast<double>(ev.spans.back().tau);
  std::int64_t origin = static_cast<std::int64_t>(context.values.size());

  // independent decode streams with decorrelated seeds
  Rng gap_rng(derive_seed(opt.mode.seed, 0));
  Rng bi_rng(derive_seed(opt.mode.seed, 1));
  DecodedStream gaps = decode_gaps(m, ibg_ctx, anchor, origin, horizon, opt, gap_rng);
  DecodedStream bis =
      decode_intensities(m, bi_ctx, gaps.tokens.size(), opt, bi_rng);

  Forecast f;
  f.horizon = horizon;
  f.series = reconstruct_decoded(gaps.values, bis.values, anchor, origin,
                                 horizon, m.window_ms);
  f.series.start_ns = context.start_ns + origin * context.window_ns();
  f.gaps = std::move(gaps.values);
  f.intensities = std::move(bis.values);
  f.ibg_tokens = std::move(gaps.tokens);
  f.bi_tokens = std::move(bis.tokens);
  return f;
}

Forecast forecast_oracle(const NetBurstModel& m, const TimeSeries& context,
                         std::int64_t horizon, OracleStream oracle,
                         const EventSequence& truth, const DecodeOptions& opt) {
  if (horizon <= 0) throw ConfigError("forecast: horizon must be > 0");
  EventSequence ev = context_events(m, context);

  std::size_t keep = static_cast<std::size_t>(m.max_context_events);
  std::vector<int> ibg_ctx = tail(encode_all(m.ibg_cb, ibg_as_double(ev)), keep);
  std::vector<int> bi_ctx = tail(encode_all(m.bi_cb, ev.bi), keep);

  // truth events that start inside the horizon set the event count
  std::vector<double> truth_gaps;
  std::vector<double> truth_bis;
  std::int64_t tau = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    tau += truth.ibg[k];
    if (tau >= horizon) break;
    truth_gaps.push_back(static_cast<double>(truth.ibg[k]));
    truth_bis.push_back(truth.bi[k]);
  }
  std::size_t count = truth_gaps.size();
  if (opt.tokenized_oracle) {
    for (double& g : truth_gaps) g = m.ibg_cb.decode(m.ibg_cb.encode(g));
    for (double& b : truth_bis) b = m.bi_cb.decode(m.bi_cb.encode(b));
  }

  Rng gap_rng(derive_seed(opt.mode.seed, 0));
  Rng bi_rng(derive_seed(opt.mode.seed, 1));

  Forecast f;
  f.horizon = horizon;
  double anchor = static_cast<double>(ev.spans.back().tau);
  std::int64_t origin = static_cast<std::int64_t>(context.values.size());

  if (oracle == OracleStream::ibg || oracle == OracleStream::both) {
    // truth timing, placed relative to the forecast window itself
    std::vector<double> bis;
    if (oracle == OracleStream::both) {
      bis = truth_bis;
    } else {
      DecodedStream d = decode_intensities(m, bi_ctx, count, opt, bi_rng);
      bis = std::move(d.values);
      f.bi_tokens = std::move(d.tokens);
    }
    f.series = reconstruct_decoded(truth_gaps, bis, 0.0, 0, horizon, m.window_ms);
    f.gaps = truth_gaps;
    f.intensities = std::move(bis);
  } else {
    // model timing, truth magnitudes
    DecodedStream gaps = decode_gaps(m, ibg_ctx, anchor, origin, horizon, opt, gap_rng);
    gaps.tokens.resize(std::min(gaps.tokens.size(), count));
    gaps.values.resize(std::min(gaps.values.size(), count));
    std::vector<double> bis(truth_bis.begin(),
                            truth_bis.begin() + static_cast<std::ptrdiff_t>(std::min(
                                count, gaps.values.size())));
    f.series = reconstruct_decoded(gaps.values, bis, anchor, origin, horizon,
                                   m.window_ms);
    f.gaps = std::move(gaps.values);
    f.ibg_tokens = std::move(gaps.tokens);
    f.intensities = std::move(bis);
  }
  f.series.start_ns = context.start_ns + origin * context.window_ns();
  return f;
}

std::vector<double> embed_series(const NetBurstModel& m,
                                 const TimeSeries& series) {
  EventSequence ev = eventize(series, m.t_act);
  if (ev.empty())
    throw DataError("embed: series has no events at t_act=" + fmt_g17(m.t_act));
  std::vector<int> ibg_tokens = encode_all(m.ibg_cb, ibg_as_double(ev));
  std::vector<int> bi_tokens = encode_all(m.bi_cb, ev.bi);
  std::vector<double> e1 = m.ibg_model.embed(ibg_tokens);
  std::vector<double> e2 = m.bi_model.embed(bi_tokens);
  e1.insert(e1.end(), e2.begin(), e2.end());
  return e1;
}

// --- model directory io ------------------------------------------------------

void NetBurstModel::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_codebook(ibg_cb, dir + "/ibg.codebook.txt");
  save_codebook(bi_cb, dir + "/bi.codebook.txt");
  ibg_model.save(dir + "/ibg.ckpt");
  bi_model.save(dir + "/bi.ckpt");
  nlohmann::json j;
  j["version"] = kVersion;
  j["t_act"] = t_act;
  j["window_ms"] = window_ms;
  j["mean_train_ibg"] = mean_train_ibg;
  j["max_context_events"] = max_context_events;
  std::ofstream f(dir + "/model.json");
  if (!f) throw DataError("cannot write " + dir + "/model.json");
  f << j.dump(2) << '\n';
}

NetBurstModel NetBurstModel::load(const std::string& dir) {
  NetBurstModel m;
  m.ibg_cb = load_codebook(dir + "/ibg.codebook.txt");
  m.bi_cb = load_codebook(dir + "/bi.codebook.txt");
  m.ibg_model = TokenModel::load(dir + "/ibg.ckpt");
  m.bi_model = TokenModel::load(dir + "/bi.ckpt");
  std::ifstream f(dir + "/model.json");
  if (!f) throw DataError("cannot open " + dir + "/model.json");
  nlohmann::json j = nlohmann::json::parse(f, nullptr, true);
  m.t_act = j.at("t_act").get<double>();
  m.window_ms = j.at("window_ms").get<double>();
  m.mean_train_ibg = j.at("mean_train_ibg").get<double>();
  m.max_context_events = j.at("max_context_events").get<int>();
  return m;
}

}  // namespace netburst
