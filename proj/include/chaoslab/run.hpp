#ifndef CHAOSLAB_RUN_HPP
#define CHAOSLAB_RUN_HPP

#include <string>

#include "chaoslab/config.hpp"

// Canned experiment recipes behind the CLI subcommands.  Each writes its
// artifacts (manifest.json + CSVs) under config.output_dir and returns a
// process exit code: 0 pass, 2 config error, 3 numerical failure, 4 audit
// violation.

namespace chaoslab {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitAudit = 4;

int run_recipe(const std::string& name, const ExperimentConfig& config);

// thread count: config value, else CHAOSLAB_THREADS, else hardware
int resolve_threads(const ExperimentConfig& config);

}  // namespace chaoslab

#endif
