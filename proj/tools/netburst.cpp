#include <cstdio>
#include <functional>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "netburst/harness.hpp"

namespace {

using netburst::ExperimentConfig;

struct CliOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = -1;
  std::string out;
};

ExperimentConfig resolve(const CliOptions& cli) {
  ExperimentConfig cfg = ExperimentConfig::load(cli.config_path);
  if (cli.seed_set) cfg.seed = cli.seed;
  if (cli.jobs >= 0) cfg.jobs = cli.jobs;
  if (!cli.out.empty()) cfg.out = cli.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"netburst: event-centric forecasting for bursty telemetry"};
  app.require_subcommand(1);

  CliOptions cli;
  std::map<std::string, std::function<int(const ExperimentConfig&)>> commands = {
      {"ingest", netburst::cmd_ingest},
      {"synth", netburst::cmd_synth},
      {"eventize", netburst::cmd_eventize},
      {"fit-codebook", netburst::cmd_fit_codebook},
      {"train", netburst::cmd_train},
      {"forecast", netburst::cmd_forecast},
      {"evaluate", netburst::cmd_evaluate},
      {"ablate", netburst::cmd_ablate},
      {"transfer", netburst::cmd_transfer},
      {"embed", netburst::cmd_embed},
      {"stats", netburst::cmd_stats},
  };
  static const std::map<std::string, std::string> descriptions = {
      {"ingest", "aggregate a trace CSV into per-entity series files"},
      {"synth", "generate a synthetic corpus and its manifest"},
      {"eventize", "convert series to inter-burst gap / intensity event files"},
      {"fit-codebook", "fit gap/intensity/raw codebooks on training splits"},
      {"train", "fit the full pipeline and save the model directory"},
      {"forecast", "forecast one series file with a saved model"},
      {"evaluate", "end-to-end pipeline with per-entity metrics"},
      {"ablate", "binning ablation plus gap/intensity oracles"},
      {"transfer", "activity-threshold sweep across granularities"},
      {"embed", "embedding extraction, k-means and silhouette curves"},
      {"stats", "Fano CCDF and mean autocorrelation exports"},
  };

  std::string chosen;
  for (auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
    sub->add_option("--config", cli.config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--seed", cli.seed, "override config seed")
        ->each([&cli](const std::string&) { cli.seed_set = true; });
    sub->add_option("--jobs", cli.jobs, "worker threads (1 = serial)");
    sub->add_option("--out", cli.out, "override output directory");
    sub->callback([&chosen, name = name]() { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = resolve(cli);
    return commands.at(chosen)(cfg);
  } catch (const netburst::ConfigError& e) {
    std::fprintf(stderr, "%s: config error: %s\n", chosen.c_str(), e.what());
    return 1;
  } catch (const netburst::NumericError& e) {
    std::fprintf(stderr, "%s: numeric error: %s\n", chosen.c_str(), e.what());
    return 3;
  } catch (const netburst::DataError& e) {
    std::fprintf(stderr, "%s: data error: %s\n", chosen.c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: error: %s\n", chosen.c_str(), e.what());
    return 3;
  }
}
