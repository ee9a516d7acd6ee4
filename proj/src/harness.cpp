#include "netburst/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <omp.h>

#include <json.hpp>

#include "netburst/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace netburst {

namespace {

// Stage wall-clock goes to stderr, never into output files, which must be
// byte-identical across reruns.
class StageTimer {
 public:
  explicit StageTimer(std::string name)
      : name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    auto dt = std::chrono::steady_clock::now() - t0_;
    double s = std::chrono::duration<double>(dt).count();
    std::fprintf(stderr, "[%s] %.2f s\n", name_.c_str(), s);
  }

 private:
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
};

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object())
    throw ConfigError("config section '" + where + "' must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError("unknown config key '" + it.key() + "' in " + where);
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

BurstyConfig parse_bursty(const json& j, const std::string& where) {
  check_keys(j, {"alpha_gap", "alpha_bi", "xm_gap", "xm_bi", "n_events",
                 "burst_len_p"},
             where);
  BurstyConfig b;
  get_if(j, "alpha_gap", b.alpha_gap);
  get_if(j, "alpha_bi", b.alpha_bi);
  get_if(j, "xm_gap", b.xm_gap);
  get_if(j, "xm_bi", b.xm_bi);
  get_if(j, "n_events", b.n_events);
  get_if(j, "burst_len_p", b.burst_len_p);
  return b;
}

json bursty_json(const BurstyConfig& b) {
  return json{{"alpha_gap", b.alpha_gap}, {"alpha_bi", b.alpha_bi},
              {"xm_gap", b.xm_gap},       {"xm_bi", b.xm_bi},
              {"n_events", b.n_events},   {"burst_len_p", b.burst_len_p}};
}

SeasonalConfig parse_seasonal(const json& j, const std::string& where) {
  check_keys(j, {"period", "amplitude", "offset", "noise_sd", "length"}, where);
  SeasonalConfig s;
  get_if(j, "period", s.period);
  get_if(j, "amplitude", s.amplitude);
  get_if(j, "offset", s.offset);
  get_if(j, "noise_sd", s.noise_sd);
  get_if(j, "length", s.length);
  return s;
}

std::string sanitize_key(const std::string& key) {
  std::string out;
  for (char c : key)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
            c == '-' || c == '_')
               ? c
               : '_';
  return out;
}

std::string entity_file(std::size_t idx, const std::string& key) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04zu_", idx);
  return buf + sanitize_key(key) + ".csv";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  return f;
}

TimeSeries concat_series(const TimeSeries& a, const TimeSeries& b) {
  TimeSeries out = a;
  out.values.insert(out.values.end(), b.values.begin(), b.values.end());
  return out;
}

TimeSeries head_series(const TimeSeries& s, std::size_t n) {
  TimeSeries out;
  out.window_ms = s.window_ms;
  out.start_ns = s.start_ns;
  out.values.assign(s.values.begin(),
                    s.values.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

void apply_jobs(const ExperimentConfig& cfg) {
  if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
}

struct Agg {
  KahanSum sum;
  std::size_t count = 0;
  void add(double v) {
    sum.add(v);
    ++count;
  }
  json to_json() const {
    json j;
    j["count"] = count;
    j["mean"] = count ? sum.value() / static_cast<double>(count) : 0.0;
    return j;
  }
  double mean() const {
    return count ? sum.value() / static_cast<double>(count) : 0.0;
  }
};

}  // namespace

// --- config -------------------------------------------------------------------

DecodeOptions ExperimentConfig::decode_options(std::uint64_t decode_seed) const {
  DecodeOptions opt;
  if (decode_mode == "greedy") {
    opt.mode = GenMode::Greedy();
    opt.mode.seed = decode_seed;
  } else if (decode_mode == "sample") {
    opt.mode = GenMode::Sample(temperature, decode_seed);
  } else {
    throw ConfigError("decode mode must be 'sample' or 'greedy', got '" +
                      decode_mode + "'");
  }
  opt.max_events_factor = max_events_factor;
  return opt;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }

  check_keys(j,
             {"seed",        "out",          "jobs",
              "window_ms",   "t_act",        "split",
              "ibg_bins",    "bi_bins",      "raw_bins",
              "horizon",     "max_context_events", "decode",
              "model",       "mase_event_scale",   "acf_max_lag",
              "trace",       "series_dir",   "series_file",
              "model_dir",   "codebook_scheme",    "synth",
              "thresholds",  "group_size",   "ks"},
             "top level");

  ExperimentConfig c;
  get_if(j, "seed", c.seed);
  get_if(j, "out", c.out);
  get_if(j, "jobs", c.jobs);
  get_if(j, "window_ms", c.window_ms);
  get_if(j, "t_act", c.t_act);
  if (j.contains("split")) {
    const json& s = j.at("split");
    check_keys(s, {"train", "val", "test"}, "split");
    get_if(s, "train", c.split.train_frac);
    get_if(s, "val", c.split.val_frac);
    get_if(s, "test", c.split.test_frac);
  }
  get_if(j, "ibg_bins", c.ibg_bins);
  get_if(j, "bi_bins", c.bi_bins);
  get_if(j, "raw_bins", c.raw_bins);
  get_if(j, "horizon", c.horizon);
  get_if(j, "max_context_events", c.max_context_events);
  if (j.contains("decode")) {
    const json& d = j.at("decode");
    check_keys(d, {"mode", "temperature", "max_events_factor"}, "decode");
    get_if(d, "mode", c.decode_mode);
    get_if(d, "temperature", c.temperature);
    get_if(d, "max_events_factor", c.max_events_factor);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m,
               {"context", "layers", "hidden", "heads", "learning_rate",
                "batch", "patience", "max_steps", "eval_every"},
               "model");
    get_if(m, "context", c.model.context);
    get_if(m, "layers", c.model.layers);
    get_if(m, "hidden", c.model.hidden);
    get_if(m, "heads", c.model.heads);
    get_if(m, "learning_rate", c.model.learning_rate);
    get_if(m, "batch", c.model.batch);
    get_if(m, "patience", c.model.patience);
    get_if(m, "max_steps", c.model.max_steps);
    get_if(m, "eval_every", c.model.eval_every);
  }
  get_if(j, "mase_event_scale", c.mase_event_scale);
  get_if(j, "acf_max_lag", c.acf_max_lag);
  get_if(j, "trace", c.trace);
  get_if(j, "series_dir", c.series_dir);
  get_if(j, "series_file", c.series_file);
  get_if(j, "model_dir", c.model_dir);
  get_if(j, "codebook_scheme", c.codebook_scheme);
  if (j.contains("synth")) {
    c.has_synth = true;
    const json& s = j.at("synth");
    check_keys(s,
               {"kind", "entities", "entities_b", "bursty", "bursty_b",
                "seasonal", "noise"},
               "synth");
    get_if(s, "kind", c.synth.kind);
    get_if(s, "entities", c.synth.entities);
    get_if(s, "entities_b", c.synth.entities_b);
    if (s.contains("bursty"))
      c.synth.bursty = parse_bursty(s.at("bursty"), "synth.bursty");
    if (s.contains("bursty_b"))
      c.synth.bursty_b = parse_bursty(s.at("bursty_b"), "synth.bursty_b");
    if (s.contains("seasonal"))
      c.synth.seasonal = parse_seasonal(s.at("seasonal"), "synth.seasonal");
    if (s.contains("noise")) {
      const json& n = s.at("noise");
      check_keys(n, {"alpha", "xm"}, "synth.noise");
      c.synth.noise = true;
      get_if(n, "alpha", c.synth.noise_alpha);
      get_if(n, "xm", c.synth.noise_xm);
    }
  }
  get_if(j, "thresholds", c.thresholds);
  get_if(j, "group_size", c.group_size);
  get_if(j, "ks", c.ks);

  c.split.validate();
  if (c.window_ms <= 0.0) throw ConfigError("window_ms must be > 0");
  if (c.t_act < 0.0) throw ConfigError("t_act must be >= 0");
  if (c.group_size < 1) throw ConfigError("group_size must be >= 1");
  c.decode_options(0);  // validates decode_mode
  return c;
}

std::string ExperimentConfig::echo_json() const {
  json j;
  j["seed"] = seed;
  j["out"] = out;
  j["jobs"] = jobs;
  j["window_ms"] = window_ms;
  j["t_act"] = t_act;
  j["split"] = {{"train", split.train_frac},
                {"val", split.val_frac},
                {"test", split.test_frac}};
  j["ibg_bins"] = ibg_bins;
  j["bi_bins"] = bi_bins;
  j["raw_bins"] = raw_bins;
  j["horizon"] = horizon;
  j["max_context_events"] = max_context_events;
  j["decode"] = {{"mode", decode_mode},
                 {"temperature", temperature},
                 {"max_events_factor", max_events_factor}};
  j["model"] = {{"context", model.context},
                {"layers", model.layers},
                {"hidden", model.hidden},
                {"heads", model.heads},
                {"learning_rate", model.learning_rate},
                {"batch", model.batch},
                {"patience", model.patience},
                {"max_steps", model.max_steps},
                {"eval_every", model.eval_every}};
  j["mase_event_scale"] = mase_event_scale;
  j["acf_max_lag"] = acf_max_lag;
  if (!trace.empty()) j["trace"] = trace;
  if (!series_dir.empty()) j["series_dir"] = series_dir;
  if (!series_file.empty()) j["series_file"] = series_file;
  if (!model_dir.empty()) j["model_dir"] = model_dir;
  j["codebook_scheme"] = codebook_scheme;
  if (has_synth) {
    json s;
    s["kind"] = synth.kind;
    s["entities"] = synth.entities;
    s["entities_b"] = synth.entities_b;
    s["bursty"] = bursty_json(synth.bursty);
    s["bursty_b"] = bursty_json(synth.bursty_b);
    s["seasonal"] = {{"period", synth.seasonal.period},
                     {"amplitude", synth.seasonal.amplitude},
                     {"offset", synth.seasonal.offset},
                     {"noise_sd", synth.seasonal.noise_sd},
                     {"length", synth.seasonal.length}};
    if (synth.noise)
      s["noise"] = {{"alpha", synth.noise_alpha}, {"xm", synth.noise_xm}};
    j["synth"] = s;
  }
  j["thresholds"] = thresholds;
  j["group_size"] = group_size;
  j["ks"] = ks;
  return j.dump(2);
}

// --- corpora ------------------------------------------------------------------

Corpus synth_corpus(const ExperimentConfig& cfg) {
  if (!cfg.has_synth) throw ConfigError("no synth section in config");
  const SynthSpec& sp = cfg.synth;
  Corpus corpus;
  char name[64];

  auto gen_b = [&](BurstyConfig tmpl, std::uint64_t idx) {
    tmpl.window_ms = cfg.window_ms;
    tmpl.seed = derive_seed(cfg.seed, idx);
    return gen_bursty(tmpl).first;
  };
  auto gen_s = [&](SeasonalConfig tmpl, std::uint64_t idx) {
    tmpl.window_ms = cfg.window_ms;
    tmpl.seed = derive_seed(cfg.seed, idx);
    return gen_seasonal(tmpl);
  };

  if (sp.kind == "bursty") {
    for (int i = 0; i < sp.entities; ++i) {
      std::snprintf(name, sizeof(name), "bursty-%03d", i);
      corpus.keys.emplace_back(name);
      corpus.series.push_back(gen_b(sp.bursty, static_cast<std::uint64_t>(i)));
    }
  } else if (sp.kind == "seasonal") {
    for (int i = 0; i < sp.entities; ++i) {
      std::snprintf(name, sizeof(name), "seasonal-%03d", i);
      corpus.keys.emplace_back(name);
      corpus.series.push_back(gen_s(sp.seasonal, static_cast<std::uint64_t>(i)));
    }
  } else if (sp.kind == "two_regime") {
    for (int i = 0; i < sp.entities; ++i) {
      std::snprintf(name, sizeof(name), "regime-a-%03d", i);
      corpus.keys.emplace_back(name);
      corpus.series.push_back(gen_b(sp.bursty, static_cast<std::uint64_t>(i)));
    }
    for (int i = 0; i < sp.entities_b; ++i) {
      std::snprintf(name, sizeof(name), "regime-b-%03d", i);
      corpus.keys.emplace_back(name);
      corpus.series.push_back(
          gen_b(sp.bursty_b, 10000 + static_cast<std::uint64_t>(i)));
    }
  } else if (sp.kind == "contrast") {
    for (int i = 0; i < sp.entities; ++i) {
      std::snprintf(name, sizeof(name), "bursty-%03d", i);
      corpus.keys.emplace_back(name);
      corpus.series.push_back(gen_b(sp.bursty, static_cast<std::uint64_t>(i)));
    }
    for (int i = 0; i < sp.entities_b; ++i) {
      std::snprintf(name, sizeof(name), "seasonal-%03d", i);
      corpus.keys.emplace_back(name);
      corpus.series.push_back(
          gen_s(sp.seasonal, 20000 + static_cast<std::uint64_t>(i)));
    }
  } else {
    throw ConfigError("unknown synth kind '" + sp.kind + "'");
  }

  // bursty lengths vary; a shared length keeps horizons and group sums aligned
  if (sp.kind != "seasonal" && sp.kind != "contrast") {
    std::size_t len = 0;
    for (const TimeSeries& s : corpus.series) len = std::max(len, s.size());
    for (TimeSeries& s : corpus.series) s.values.resize(len, 0.0);
  }
  if (sp.noise) {
    for (std::size_t i = 0; i < corpus.series.size(); ++i)
      corpus.series[i] =
          add_pareto_noise(corpus.series[i], sp.noise_alpha, sp.noise_xm,
                           derive_seed(cfg.seed, 1000000 + i));
  }
  return corpus;
}

Corpus build_corpus(const ExperimentConfig& cfg) {
  if (cfg.has_synth) return synth_corpus(cfg);
  if (!cfg.series_dir.empty()) return load_corpus_dir(cfg.series_dir);
  if (!cfg.trace.empty()) {
    std::vector<RawRecord> records = read_trace_csv(cfg.trace);
    std::map<std::string, TimeSeries> by_key =
        aggregate_records(records, cfg.window_ms);
    Corpus corpus;
    for (auto& [key, s] : by_key) {
      corpus.keys.push_back(key);
      corpus.series.push_back(std::move(s));
    }
    return corpus;
  }
  throw ConfigError("config needs one of: synth, series_dir, trace");
}

void write_corpus(const Corpus& corpus, const ExperimentConfig& cfg,
                  const std::string& dir) {
  fs::create_directories(dir + "/series");
  json manifest;
  manifest["version"] = kVersion;
  manifest["window_ms"] = cfg.window_ms;
  manifest["seed"] = cfg.seed;
  manifest["config"] = json::parse(cfg.echo_json());
  json list = json::array();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::string file = "series/" + entity_file(i, corpus.keys[i]);
    write_series_csv(corpus.series[i], corpus.keys[i], dir + "/" + file);
    list.push_back({{"key", corpus.keys[i]}, {"file", file}});
  }
  manifest["series"] = list;
  open_out(dir + "/manifest.json") << manifest.dump(2) << '\n';
}

Corpus load_corpus_dir(const std::string& dir) {
  std::ifstream f(dir + "/manifest.json");
  if (!f) throw DataError("cannot open " + dir + "/manifest.json");
  json manifest = json::parse(f, nullptr, true);
  Corpus corpus;
  for (const json& e : manifest.at("series")) {
    std::string key;
    corpus.series.push_back(
        read_series_csv(dir + "/" + e.at("file").get<std::string>(), &key));
    corpus.keys.push_back(key);
  }
  return corpus;
}

// --- shared evaluation pieces -------------------------------------------------

EntityEval evaluate_forecast(const Forecast& fc, const SplitResult& sp,
                             std::int64_t horizon, double t_act,
                             bool event_scale) {
  EntityEval ev;
  TimeSeries truth = head_series(sp.test, static_cast<std::size_t>(horizon));
  try {
    MaseResult mr = mase_events(fc.series, truth, sp.train, t_act, event_scale);
    if (mr.no_events) {
      ev.status = "no_events";
    } else {
      ev.mase = mr.value;
      ev.mase_ok = true;
    }
  } catch (const MetricError& e) {
    ev.status = std::string("metric_error: ") + e.what();
  }
  ev.wd_window = wasserstein1(fc.series.values, truth.values);
  ev.wd_ok = true;
  EventSequence truth_ev = eventize(truth, t_act);
  ev.truth_events = truth_ev.size();
  if (!truth_ev.empty() && !fc.gaps.empty()) {
    std::vector<double> tg;
    tg.reserve(truth_ev.size());
    for (std::int64_t g : truth_ev.ibg) tg.push_back(static_cast<double>(g));
    ev.wd_ibg = wasserstein1(fc.gaps, tg);
    ev.wd_bi = wasserstein1(fc.intensities, truth_ev.bi);
    ev.wd_streams_ok = true;
  }
  return ev;
}

namespace {

struct SplitCorpus {
  std::vector<SplitResult> splits;
  std::vector<TimeSeries> train_segs, val_segs, contexts;
};

SplitCorpus split_corpus(const Corpus& corpus, const SplitSpec& spec) {
  SplitCorpus out;
  for (const TimeSeries& s : corpus.series) {
    SplitResult sp = chronological_split(s, spec);
    out.train_segs.push_back(sp.train);
    out.val_segs.push_back(sp.val);
    out.contexts.push_back(concat_series(sp.train, sp.val));
    out.splits.push_back(std::move(sp));
  }
  return out;
}

NetBurstOptions nb_options(const ExperimentConfig& cfg) {
  NetBurstOptions opt;
  opt.ibg_bins = cfg.ibg_bins;
  opt.bi_bins = cfg.bi_bins;
  opt.ibg_model = cfg.model;
  opt.ibg_model.seed = derive_seed(cfg.seed, 10);
  opt.bi_model = cfg.model;
  opt.bi_model.seed = derive_seed(cfg.seed, 11);
  opt.max_context_events = cfg.max_context_events;
  return opt;
}

std::int64_t entity_horizon(const ExperimentConfig& cfg, const SplitResult& sp) {
  std::int64_t test_len = static_cast<std::int64_t>(sp.test.values.size());
  return cfg.horizon > 0 ? std::min(cfg.horizon, test_len) : test_len;
}

json report_header(const ExperimentConfig& cfg) {
  json j;
  j["version"] = kVersion;
  j["config"] = json::parse(cfg.echo_json());
  return j;
}

void write_report(const json& j, const std::string& path) {
  open_out(path) << j.dump(2) << '\n';
}

json agg_with_errors(const Agg& a, std::size_t no_events, std::size_t errors) {
  json j = a.to_json();
  j["no_events"] = no_events;
  j["errors"] = errors;
  return j;
}

}  // namespace

// --- simple file commands ------------------------------------------------------

int cmd_ingest(const ExperimentConfig& cfg) {
  apply_jobs(cfg);
  StageTimer t("ingest");
  if (cfg.trace.empty()) throw ConfigError("ingest needs a 'trace' path");
  Corpus corpus = build_corpus(cfg);
  write_corpus(corpus, cfg, cfg.out);
  return 0;
}

int cmd_synth(const ExperimentConfig& cfg) {
  apply_jobs(cfg);
  StageTimer t("synth");
  Corpus corpus = synth_corpus(cfg);
  write_corpus(corpus, cfg, cfg.out);
  return 0;
}

int cmd_eventize(const ExperimentConfig& cfg) {
  apply_jobs(cfg);
  StageTimer t("eventize");
  Corpus corpus = build_corpus(cfg);
  fs::create_directories(cfg.out + "/events");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EventSequence ev = eventize(corpus.series[i], cfg.t_act);
    std::string file = cfg.out + "/events/" +
                       entity_file(i, corpus.keys[i] + ".events");
    write_events_csv(ev, corpus.keys[i], file);
  }
  return 0;
}

int cmd_fit_codebook(const ExperimentConfig& cfg) {
  apply_jobs(cfg);
  StageTimer t("fit-codebook");
  Corpus corpus = build_corpus(cfg);
  SplitCorpus sc = split_corpus(corpus, cfg.split);

  std::vector<double> gaps, bis, raw;
  for (const TimeSeries& s : sc.train_segs) {
    EventSequence ev = eventize(s, cfg.t_act);
    for (std::int64_t g : ev.ibg) gaps.push_back(static_cast<double>(g));
    for (double b : ev.bi) bis.push_back(b);
    raw.insert(raw.end(), s.values.begin(), s.values.end());
  }
  if (gaps.empty())
    throw DataError("no events in training data at t_act=" + fmt_g17(cfg.t_act));

  fs::create_directories(cfg.out + "/codebooks");
  save_codebook(fit_quantile(gaps, cfg.ibg_bins),
                cfg.out + "/codebooks/ibg.codebook.txt");
  save_codebook(fit_quantile(bis, cfg.bi_bins),
                cfg.out + "/codebooks/bi.codebook.txt");
  Codebook raw_cb = cfg.codebook_scheme == "uniform"
                        ? fit_uniform(raw, cfg.raw_bins)
                        : fit_quantile(raw, cfg.raw_bins);
  save_codebook(raw_cb, cfg.out + "/codebooks/raw.codebook.txt");
  return 0;
}

namespace {

json train_report_json(const TrainReport& r) {
  json j;
  j["steps"] = r.steps;
  j["final_train_loss"] = r.final_train_loss;
  j["best_val_loss"] = r.best_val_loss;
  j["stopped_early"] = r.stopped_early;
  json curve = json::array();
  for (const LossPoint& p : r.loss_curve)
    curve.push_back({{"step", p.step},
                     {"train_loss", p.train_loss},
                     {"val_loss", p.val_loss}});
  j["loss_curve"] = curve;
  return j;
}

}  // namespace

int cmd_train(const ExperimentConfig& cfg) {
  apply_jobs(cfg);
  StageTimer t("train");
  Corpus corpus = build_corpus(cfg);
  SplitCorpus sc = split_corpus(corpus, cfg.split);
  NetBurstModel nb =
      fit_netburst(sc.train_segs, sc.val_segs, cfg.t_act, nb_options(cfg));
  fs::create_directories(cfg.out);
  nb.save(cfg.out + "/model");
  json j = report_header(cfg);
  j["ibg"] = train_report_json(nb.ibg_report);
  j["bi"] = train_report_json(nb.bi_report);
  j["ibg_vocab"] = nb.ibg_cb.bins();
  j["bi_vocab"] = nb.bi_cb.bins();
  write_report(j, cfg.out + "/train_report.json");
  return 0;
}

namespace {

void write_forecast_files(const Forecast& fc, const std::string& key,
                          const std::string& stem) {
  write_series_csv(fc.series, key, stem + ".csv");
  json j;
  j["horizon"] = fc.horizon;
  j["gaps"] = fc.gaps;
  j["intensities"] = fc.intensities;
  j["ibg_tokens"] = fc.ibg_tokens;
  j["bi_tokens"] = fc.bi_tokens;
  open_out(stem + ".decoded.json") << j.dump(2) << '\n';
}

}  // namespace

int cmd_forecast(const ExperimentConfig& cfg) {
  apply_jobs(cfg);
  StageTimer t("forecast");
  if (cfg.model_dir.empty() || cfg.series_file.empty())
    throw ConfigError("forecast needs 'model_dir' and 'series_file'");
  if (cfg.horizon <= 0) throw ConfigError("forecast needs 'horizon' > 0");
  NetBurstModel nb = NetBurstModel::load(cfg.model_dir);
  std::string key;
  TimeSeries context = read_series_csv(cfg.series_file, &key);
  Forecast fc =
      forecast(nb, context, cfg.horizon, cfg.decode_options(cfg.seed));
  fs::create_directories(cfg.out);
  write_forecast_files(fc, key, cfg.out + "/forecast");
  return 0;
}

// --- pipeline / evaluate --------------------------------------------------------

int cmd_evaluate(const ExperimentConfig& cfg) {
  apply_jobs(cfg);
  Corpus corpus = build_corpus(cfg);
  SplitCorpus sc = split_corpus(corpus, cfg.split);

  NetBurstModel nb;
  {
    StageTimer t("fit");
    nb = fit_netburst(sc.train_segs, sc.val_segs, cfg.t_act, nb_options(cfg));
  }

  std::int64_t n = static_cast<std::int64_t>(corpus.size());
  std::vector<EntityEval> evals(corpus.size());
  std::vector<double> mase_zero(corpus.size(), 0.0), mase_pers(corpus.size(), 0.0);
  std::vector<int> base_ok(corpus.size(), 0);
  {
    StageTimer t("forecast+metrics");
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
      std::size_t ui = static_cast<std::size_t>(i);
      try {
        std::int64_t horizon = entity_horizon(cfg, sc.splits[ui]);
        if (horizon <= 0) {
          evals[ui].status = "empty_test";
          continue;
        }
        Forecast fc = forecast(
            nb, sc.contexts[ui], horizon,
            cfg.decode_options(derive_seed(cfg.seed, 2000000 + static_cast<std::uint64_t>(i))));
        evals[ui] =
            evaluate_forecast(fc, sc.splits[ui], horizon, cfg.t_act,
                              cfg.mase_event_scale);
        evals[ui].fc = std::move(fc);
        TimeSeries truth = head_series(sc.splits[ui].test,
                                       static_cast<std::size_t>(horizon));
        MaseResult z = mase_events(zero_forecast(horizon, cfg.window_ms), truth,
                                   sc.splits[ui].train, cfg.t_act,
                                   cfg.mase_event_scale);
        MaseResult p = mase_events(persistence_forecast(sc.contexts[ui], horizon),
                                   truth, sc.splits[ui].train, cfg.t_act,
                                   cfg.mase_event_scale);
        if (!z.no_events && !p.no_events) {
          mase_zero[ui] = z.value;
          mase_pers[ui] = p.value;
          base_ok[ui] = 1;
        }
      } catch (const std::exception& e) {
        evals[ui].status = std::string("error: ") + e.what();
      }
    }
  }

  fs::create_directories(cfg.out + "/forecasts");
  Agg mase, wd_window, wd_ibg, wd_bi, zero_agg, pers_agg;
  std::size_t no_events = 0, errors = 0;
  std::ofstream pe = open_out(cfg.out + "/per_entity.csv");
  pe << "key,status,truth_events,mase,wd_window,wd_ibg,wd_bi,mase_zero,mase_"
        "persistence\n";
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const EntityEval& ev = evals[i];
    if (ev.mase_ok) mase.add(ev.mase);
    else if (ev.status == "no_events") ++no_events;
    else ++errors;
    if (ev.wd_ok) wd_window.add(ev.wd_window);
    if (ev.wd_streams_ok) {
      wd_ibg.add(ev.wd_ibg);
      wd_bi.add(ev.wd_bi);
    }
    if (base_ok[i]) {
      zero_agg.add(mase_zero[i]);
      pers_agg.add(mase_pers[i]);
    }
    pe << corpus.keys[i] << ',' << ev.status << ',' << ev.truth_events << ','
       << (ev.mase_ok ? fmt_g17(ev.mase) : "") << ','
       << (ev.wd_ok ? fmt_g17(ev.wd_window) : "") << ','
       << (ev.wd_streams_ok ? fmt_g17(ev.wd_ibg) : "") << ','
       << (ev.wd_streams_ok ? fmt_g17(ev.wd_bi) : "") << ','
       << (base_ok[i] ? fmt_g17(mase_zero[i]) : "") << ','
       << (base_ok[i] ? fmt_g17(mase_pers[i]) : "") << '\n';
    if (ev.wd_ok) {
      std::string stem = entity_file(i, corpus.keys[i]);
      stem.resize(stem.size() - 4);  // drop .csv
      write_forecast_files(ev.fc, corpus.keys[i], cfg.out + "/forecasts/" + stem);
    }
  }

  json j = report_header(cfg);
  j["entities"] = corpus.size();
  j["metrics"]["mase"] = agg_with_errors(mase, no_events, errors);
  j["metrics"]["wd_window"] = wd_window.to_json();
  j["metrics"]["wd_ibg"] = wd_ibg.to_json();
  j["metrics"]["wd_bi"] = wd_bi.to_json();
  j["metrics"]["mase_zero"] = zero_agg.to_json();
  j["metrics"]["mase_persistence"] = pers_agg.to_json();
  j["ibg_train"] = train_report_json(nb.ibg_report);
  j["bi_train"] = train_report_json(nb.bi_report);
  write_report(j, cfg.out + "/report.json");
  return 0;
}

// --- ablation -------------------------------------------------------------------

int cmd_ablate(const ExperimentConfig& cfg) {
  apply_jobs(cfg);
  Corpus corpus = build_corpus(cfg);
  SplitCorpus sc = split_corpus(corpus, cfg.split);

  NetBurstModel nb;
  RawTokenForecaster raw_u, raw_q;
  {
    StageTimer t("fit netburst");
    nb = fit_netburst(sc.train_segs, sc.val_segs, cfg.t_act, nb_options(cfg));
  }
  {
    StageTimer t("fit raw-uniform");
    ModelConfig mc = cfg.model;
    mc.seed = derive_seed(cfg.seed, 12);
    raw_u = raw_fit(sc.train_segs, sc.val_segs, BinScheme::uniform,
                    cfg.raw_bins, mc);
  }
  {
    StageTimer t("fit raw-quantile");
    ModelConfig mc = cfg.model;
    mc.seed = derive_seed(cfg.seed, 13);
    raw_q = raw_fit(sc.train_segs, sc.val_segs, BinScheme::quantile,
                    cfg.raw_bins, mc);
  }

  constexpr int kModels = 5;  // netburst, oracle-ibg, oracle-bi, raw-u, raw-q
  const char* model_names[kModels] = {"netburst", "netburst-oracle-ibg",
                                      "netburst-oracle-bi", "raw-uniform",
                                      "raw-quantile"};
  std::int64_t n = static_cast<std::int64_t>(corpus.size());
  std::vector<std::array<EntityEval, kModels>> evals(corpus.size());
  std::vector<std::string> entity_status(corpus.size(), "ok");
  {
    StageTimer t("forecast+metrics");
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
      std::size_t ui = static_cast<std::size_t>(i);
      try {
        std::int64_t horizon = entity_horizon(cfg, sc.splits[ui]);
        if (horizon <= 0) {
          entity_status[ui] = "empty_test";
          continue;
        }
        TimeSeries truth = head_series(sc.splits[ui].test,
                                       static_cast<std::size_t>(horizon));
        EventSequence truth_ev = eventize(truth, cfg.t_act);
        DecodeOptions opt = cfg.decode_options(
            derive_seed(cfg.seed, 2000000 + static_cast<std::uint64_t>(i)));
        Forecast plain = forecast(nb, sc.contexts[ui], horizon, opt);
        evals[ui][0] = evaluate_forecast(plain, sc.splits[ui], horizon,
                                         cfg.t_act, cfg.mase_event_scale);
        if (!truth_ev.empty()) {
          Forecast oibg = forecast_oracle(nb, sc.contexts[ui], horizon,
                                          OracleStream::ibg, truth_ev, opt);
          Forecast obi = forecast_oracle(nb, sc.contexts[ui], horizon,
                                         OracleStream::bi, truth_ev, opt);
          evals[ui][1] = evaluate_forecast(oibg, sc.splits[ui], horizon,
                                           cfg.t_act, cfg.mase_event_scale);
          evals[ui][2] = evaluate_forecast(obi, sc.splits[ui], horizon,
                                           cfg.t_act, cfg.mase_event_scale);
        } else {
          evals[ui][1].status = "no_truth_events";
          evals[ui][2].status = "no_truth_events";
        }
        GenMode gm_u = cfg.decode_options(derive_seed(cfg.seed, 4000000 + static_cast<std::uint64_t>(i))).mode;
        GenMode gm_q = cfg.decode_options(derive_seed(cfg.seed, 5000000 + static_cast<std::uint64_t>(i))).mode;
        Forecast fu;
        fu.horizon = horizon;
        fu.series = raw_forecast(raw_u, sc.contexts[ui], horizon, gm_u);
        evals[ui][3] = evaluate_forecast(fu, sc.splits[ui], horizon, cfg.t_act,
                                         cfg.mase_event_scale);
        Forecast fq;
        fq.horizon = horizon;
        fq.series = raw_forecast(raw_q, sc.contexts[ui], horizon, gm_q);
        evals[ui][4] = evaluate_forecast(fq, sc.splits[ui], horizon, cfg.t_act,
                                         cfg.mase_event_scale);
      } catch (const std::exception& e) {
        entity_status[ui] = std::string("error: ") + e.what();
      }
    }
  }

  fs::create_directories(cfg.out);
  std::array<Agg, kModels> mase, wd;
  Agg closed_ibg, closed_bi;  // fraction of the plain WD gap removed
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (entity_status[i] != "ok") continue;
    for (int m = 0; m < kModels; ++m) {
      if (evals[i][m].mase_ok) mase[static_cast<std::size_t>(m)].add(evals[i][m].mase);
      if (evals[i][m].wd_ok) wd[static_cast<std::size_t>(m)].add(evals[i][m].wd_window);
    }
    if (evals[i][0].wd_ok && evals[i][1].wd_ok && evals[i][2].wd_ok &&
        evals[i][0].wd_window > 0.0) {
      closed_ibg.add((evals[i][0].wd_window - evals[i][1].wd_window) /
                     evals[i][0].wd_window);
      closed_bi.add((evals[i][0].wd_window - evals[i][2].wd_window) /
                    evals[i][0].wd_window);
    }
  }

  std::ofstream ab = open_out(cfg.out + "/ablation.csv");
  ab << "model,metric,value\n";
  for (int m = 0; m < kModels; ++m) {
    ab << model_names[m] << ",mase_event," << fmt_g17(mase[static_cast<std::size_t>(m)].mean()) << '\n';
    ab << model_names[m] << ",wd_window," << fmt_g17(wd[static_cast<std::size_t>(m)].mean()) << '\n';
  }
  ab << "netburst-oracle-ibg,wd_gap_closed," << fmt_g17(closed_ibg.mean()) << '\n';
  ab << "netburst-oracle-bi,wd_gap_closed," << fmt_g17(closed_bi.mean()) << '\n';

  json j = report_header(cfg);
  j["entities"] = corpus.size();
  for (int m = 0; m < kModels; ++m) {
    j["models"][model_names[m]]["mase_event"] = mase[static_cast<std::size_t>(m)].to_json();
    j["models"][model_names[m]]["wd_window"] = wd[static_cast<std::size_t>(m)].to_json();
  }
  j["wd_gap_closed"]["oracle_ibg"] = closed_ibg.to_json();
  j["wd_gap_closed"]["oracle_bi"] = closed_bi.to_json();
  write_report(j, cfg.out + "/report.json");
  return 0;
}

// --- threshold transfer -----------------------------------------------------------

int cmd_transfer(const ExperimentConfig& cfg) {
  apply_jobs(cfg);
  Corpus fine = build_corpus(cfg);
  SplitCorpus fine_sc = split_corpus(fine, cfg.split);

  NetBurstModel nb;
  {
    StageTimer t("fit fine model");
    nb = fit_netburst(fine_sc.train_segs, fine_sc.val_segs, cfg.t_act,
                      nb_options(cfg));
  }

  // global activity codebook, fit on fine training actives
  std::vector<double> fine_train_active;
  for (const TimeSeries& s : fine_sc.train_segs)
    for (double v : s.values)
      if (v > cfg.t_act) fine_train_active.push_back(v);
  if (fine_train_active.size() < 2)
    throw DataError("transfer: too few active fine windows at t_act=" +
                    fmt_g17(cfg.t_act));
  Codebook act_cb = fit_quantile(fine_train_active, cfg.raw_bins);

  std::vector<double> fine_active;
  for (const TimeSeries& s : fine.series)
    for (double v : s.values)
      if (v > cfg.t_act) fine_active.push_back(v);
  TimeSeries fine_pool;
  fine_pool.window_ms = cfg.window_ms;
  fine_pool.values = fine_active;
  std::vector<double> p_fine =
      build_activity_histogram(fine_pool, cfg.t_act, act_cb);

  std::vector<TimeSeries> coarse =
      aggregate_groups(fine.series, cfg.group_size, derive_seed(cfg.seed, 3000000));
  if (coarse.empty()) throw DataError("transfer: no coarse series");

  std::ofstream tc = open_out(cfg.out + "/transfer.csv");
  tc << "threshold,jsd,mase,wd_window,coarse_events\n";
  json rows = json::array();

  for (double T : cfg.thresholds) {
    StageTimer t("threshold " + fmt_g17(T));
    std::vector<TimeSeries> thr;
    thr.reserve(coarse.size());
    for (const TimeSeries& s : coarse) thr.push_back(threshold_series(s, T));

    std::vector<double> coarse_active;
    for (const TimeSeries& s : thr)
      for (double v : s.values)
        if (v > T) coarse_active.push_back(v);
    if (coarse_active.empty())
      throw DataError("transfer: no active coarse windows at threshold " +
                      fmt_g17(T));
    TimeSeries coarse_pool;
    coarse_pool.window_ms = cfg.window_ms;
    coarse_pool.values = coarse_active;
    double jsd_T = jsd(p_fine, build_activity_histogram(coarse_pool, T, act_cb));

    // adapted tokenizers: coarse-refit codebooks under the fine-trained models
    Corpus coarse_corpus;
    coarse_corpus.series = thr;
    for (std::size_t i = 0; i < thr.size(); ++i)
      coarse_corpus.keys.push_back("coarse-" + std::to_string(i));
    SplitCorpus csc = split_corpus(coarse_corpus, cfg.split);

    std::vector<double> gaps, bis;
    std::size_t coarse_events = 0;
    for (const TimeSeries& s : csc.train_segs) {
      EventSequence ev = eventize(s, T);
      coarse_events += ev.size();
      for (std::int64_t g : ev.ibg) gaps.push_back(static_cast<double>(g));
      for (double b : ev.bi) bis.push_back(b);
    }
    if (gaps.size() < 2)
      throw DataError("transfer: too few coarse events at threshold " +
                      fmt_g17(T));

    NetBurstModel tm = nb;
    tm.t_act = T;
    tm.ibg_cb = fit_quantile(gaps, nb.ibg_model.config().vocab);
    tm.bi_cb = fit_quantile(bis, nb.bi_model.config().vocab);
    tm.mean_train_ibg = kahan_mean(gaps);

    std::int64_t n = static_cast<std::int64_t>(thr.size());
    std::vector<EntityEval> evals(thr.size());
    std::vector<int> ok(thr.size(), 0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
      std::size_t ui = static_cast<std::size_t>(i);
      try {
        std::int64_t horizon = entity_horizon(cfg, csc.splits[ui]);
        if (horizon <= 0) continue;
        Forecast fc = forecast(
            tm, csc.contexts[ui], horizon,
            cfg.decode_options(derive_seed(cfg.seed, 8000000 + static_cast<std::uint64_t>(i))));
        evals[ui] = evaluate_forecast(fc, csc.splits[ui], horizon, T,
                                      cfg.mase_event_scale);
        ok[ui] = 1;
      } catch (const std::exception&) {
        ok[ui] = 0;
      }
    }
    Agg mase, wd;
    for (std::size_t i = 0; i < thr.size(); ++i) {
      if (!ok[i]) continue;
      if (evals[i].mase_ok) mase.add(evals[i].mase);
      if (evals[i].wd_ok) wd.add(evals[i].wd_window);
    }

    tc << fmt_g17(T) << ',' << fmt_g17(jsd_T) << ',' << fmt_g17(mase.mean())
       << ',' << fmt_g17(wd.mean()) << ',' << coarse_events << '\n';
    rows.push_back({{"threshold", T},
                    {"jsd", jsd_T},
                    {"mase", mase.to_json()},
                    {"wd_window", wd.to_json()},
                    {"coarse_events", coarse_events}});
  }

  json j = report_header(cfg);
  j["fine_entities"] = fine.size();
  j["coarse_entities"] = coarse.size();
  j["thresholds"] = rows;
  write_report(j, cfg.out + "/report.json");
  return 0;
}

// --- embeddings --------------------------------------------------------------------

int cmd_embed(const ExperimentConfig& cfg) {
  apply_jobs(cfg);
  Corpus corpus = build_corpus(cfg);
  SplitCorpus sc = split_corpus(corpus, cfg.split);

  NetBurstModel nb;
  RawTokenForecaster raw_u;
  {
    StageTimer t("fit netburst");
    nb = fit_netburst(sc.train_segs, sc.val_segs, cfg.t_act, nb_options(cfg));
  }
  {
    StageTimer t("fit raw-uniform");
    ModelConfig mc = cfg.model;
    mc.seed = derive_seed(cfg.seed, 12);
    raw_u = raw_fit(sc.train_segs, sc.val_segs, BinScheme::uniform,
                    cfg.raw_bins, mc);
  }

  std::int64_t n = static_cast<std::int64_t>(corpus.size());
  std::vector<std::vector<double>> nb_emb(corpus.size()), raw_emb(corpus.size());
  std::vector<int> ok(corpus.size(), 0);
  std::size_t skipped = 0;
  {
    StageTimer t("embed");
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
      std::size_t ui = static_cast<std::size_t>(i);
      try {
        nb_emb[ui] = embed_series(nb, corpus.series[ui]);
        raw_emb[ui] = raw_embed(raw_u, corpus.series[ui]);
        ok[ui] = 1;
      } catch (const std::exception&) {
        ok[ui] = 0;  // entities without events are skipped and counted
      }
    }
  }
  std::vector<std::vector<double>> nb_pts, raw_pts;
  std::vector<std::string> pt_keys;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!ok[i]) {
      ++skipped;
      continue;
    }
    nb_pts.push_back(nb_emb[i]);
    raw_pts.push_back(raw_emb[i]);
    pt_keys.push_back(corpus.keys[i]);
  }

  fs::create_directories(cfg.out);
  std::ofstream sil = open_out(cfg.out + "/silhouette.csv");
  sil << "model,k,silhouette,status\n";
  json ks_json = json::array();
  for (int k : cfg.ks) {
    json row;
    row["k"] = k;
    if (k < 2 || static_cast<std::size_t>(k) > nb_pts.size()) {
      sil << "netburst," << k << ",,k_out_of_range\n";
      sil << "raw-uniform," << k << ",,k_out_of_range\n";
      row["status"] = "k_out_of_range";
      ks_json.push_back(row);
      continue;
    }
    KmeansResult km_nb =
        kmeans(nb_pts, k, derive_seed(cfg.seed, 6000000 + static_cast<std::uint64_t>(k)));
    KmeansResult km_raw =
        kmeans(raw_pts, k, derive_seed(cfg.seed, 7000000 + static_cast<std::uint64_t>(k)));
    double s_nb = silhouette(nb_pts, km_nb.assignments);
    double s_raw = silhouette(raw_pts, km_raw.assignments);
    sil << "netburst," << k << ',' << fmt_g17(s_nb) << ",ok\n";
    sil << "raw-uniform," << k << ',' << fmt_g17(s_raw) << ",ok\n";
    row["netburst"] = s_nb;
    row["raw_uniform"] = s_raw;
    row["status"] = "ok";
    ks_json.push_back(row);
  }

  auto write_pca = [&](const std::vector<std::vector<double>>& pts,
                       const std::string& path) {
    std::vector<std::array<double, 2>> proj = pca2(pts);
    std::ofstream f = open_out(path);
    f << "key,x,y\n";
    for (std::size_t i = 0; i < proj.size(); ++i)
      f << pt_keys[i] << ',' << fmt_g17(proj[i][0]) << ','
        << fmt_g17(proj[i][1]) << '\n';
  };
  if (!nb_pts.empty()) {
    write_pca(nb_pts, cfg.out + "/pca_netburst.csv");
    write_pca(raw_pts, cfg.out + "/pca_raw.csv");
  }

  json j = report_header(cfg);
  j["entities"] = corpus.size();
  j["embedded"] = nb_pts.size();
  j["skipped"] = skipped;
  j["ks"] = ks_json;
  write_report(j, cfg.out + "/report.json");
  return 0;
}

// --- fano / acf statistics ------------------------------------------------------------

int cmd_stats(const ExperimentConfig& cfg) {
  apply_jobs(cfg);
  StageTimer t("stats");
  Corpus corpus = build_corpus(cfg);
  fs::create_directories(cfg.out);

  struct Group {
    std::vector<double> fanos;
    std::vector<KahanSum> acf_sum;
    std::size_t acf_count = 0;
    std::size_t skipped = 0;
  };
  std::map<std::string, Group> groups;

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::string group = corpus.keys[i].substr(0, corpus.keys[i].find('-'));
    Group& g = groups[group];
    g.acf_sum.resize(static_cast<std::size_t>(cfg.acf_max_lag) + 1);
    try {
      g.fanos.push_back(fano(corpus.series[i]));
      if (corpus.series[i].size() <= static_cast<std::size_t>(cfg.acf_max_lag))
        throw MetricError("series shorter than acf_max_lag");
      std::vector<double> r = acf(corpus.series[i], cfg.acf_max_lag);
      for (std::size_t l = 0; l < r.size(); ++l) g.acf_sum[l].add(r[l]);
      ++g.acf_count;
    } catch (const MetricError&) {
      ++g.skipped;
    }
  }

  json j = report_header(cfg);
  j["entities"] = corpus.size();
  for (auto& [name, g] : groups) {
    std::ofstream fc = open_out(cfg.out + "/fano_ccdf_" + name + ".csv");
    fc << "x,y\n";
    for (const auto& pt : ccdf_points(g.fanos))
      fc << fmt_g17(pt[0]) << ',' << fmt_g17(pt[1]) << '\n';
    std::ofstream ac = open_out(cfg.out + "/acf_mean_" + name + ".csv");
    ac << "x,y\n";
    for (std::size_t l = 0; l < g.acf_sum.size(); ++l)
      ac << l << ','
         << fmt_g17(g.acf_count ? g.acf_sum[l].value() /
                                      static_cast<double>(g.acf_count)
                                : 0.0)
         << '\n';
    json gj;
    gj["entities"] = g.fanos.size() + g.skipped;
    gj["skipped"] = g.skipped;
    if (!g.fanos.empty()) {
      gj["fano_min"] = *std::min_element(g.fanos.begin(), g.fanos.end());
      gj["fano_max"] = *std::max_element(g.fanos.begin(), g.fanos.end());
    }
    j["groups"][name] = gj;
  }
  write_report(j, cfg.out + "/report.json");
  return 0;
}

}  // namespace netburst
