#include <cstdio>

#include "CLI11.hpp"
#include "perc/config.hpp"

// perclab: continuum percolation simulation lab.
//
//   perclab run    --config cfg.json [--seed S] [--threads N] [--oracle]
//                  [--out DIR]
//   perclab replay --summary out/summary.json [--rows all|0,3,7]
//                  [--threads N]
//
// Exit codes: 0 ok, 2 config validation error, 3 runtime error,
// 4 replay mismatch.

int main(int argc, char** argv) {
  CLI::App app{"continuum percolation lab"};
  app.require_subcommand(1);

  std::string config_path, out_dir, summary_path, rows = "all";
  std::uint64_t seed_override = 0;
  bool seed_set = false, oracle = false;
  int threads = 0;

  CLI::App* run = app.add_subcommand("run", "run an experiment from a config");
  run->add_option("--config", config_path, "config JSON path")->required();
  run->add_option("--seed", seed_override, "override master seed")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--threads", threads, "worker threads (output-invariant)");
  run->add_flag("--oracle", oracle, "enable oracle cross-validation");
  run->add_option("--out", out_dir, "output directory");

  CLI::App* replay = app.add_subcommand("replay", "re-execute and verify rows");
  replay->add_option("--summary", summary_path, "summary JSON path")
      ->required();
  replay->add_option("--rows", rows, "row selector: 'all' or comma list");
  replay->add_option("--threads", threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      perc::ExperimentConfig cfg = perc::load_config(config_path);
      if (seed_set) cfg.master_seed = seed_override;
      if (threads > 0) cfg.threads = threads;
      if (oracle) cfg.oracle_crosscheck = true;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      return perc::run_experiment(cfg);
    }
    return perc::replay_summary(summary_path, rows, threads);
  } catch (const perc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
