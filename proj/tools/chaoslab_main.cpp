#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "chaoslab/run.hpp"

// chaoslab <subcommand> --config PATH [--seed U64] [--out DIR] [--threads K]

int main(int argc, char** argv) {
  CLI::App app{"chaoslab: mean-field Langevin laboratory"};
  app.require_subcommand(1);

  const char* recipes[] = {"equilibrium", "meanfield", "particles",
                           "liouville",   "diagnose",  "chaos-report"};
  std::string config_path, out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;
  for (const char* name : recipes) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
      seed_set = true;
    });
    sub->add_option("--out", out_dir, "output directory override");
    sub->add_option("--threads", threads, "worker threads (0 = machine cores)");
  }

  CLI11_PARSE(app, argc, argv);

  chaoslab::ExperimentConfig cfg;
  try {
    cfg = chaoslab::load_config(config_path);
  } catch (const chaoslab::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return chaoslab::kExitConfig;
  }
  if (seed_set) cfg.ensemble.master_seed = seed;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (threads >= 0) cfg.threads = threads;

  return chaoslab::run_recipe(app.get_subcommands()[0]->get_name(), cfg);
}
