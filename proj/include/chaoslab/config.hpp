#ifndef CHAOSLAB_CONFIG_HPP
#define CHAOSLAB_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "chaoslab/diagnostics.hpp"
#include "chaoslab/kernels.hpp"

// Experiment configuration: a TOML-subset text format (key = value, [table]
// headers, inline tables) parsed into a fully validated ExperimentConfig.
// Parsing collects every error, each tagged with its key path.

namespace chaoslab {

struct DynamicsConfig {
  std::string kind = "sde";  // sde | mala_gibbs | mala_modulated
  double dt = 1e-3;
  double t_end = 1.0;
  double snapshot_dt = 0.1;
};

struct EnsembleConfig {
  int N = 16;
  int M = 8;
  uint64_t master_seed = 1;
};

struct ToleranceConfig {
  double equilibrium = 1e-10;
  double disc_c = 10.0;  // tol_disc = disc_c * (h^2 + dt) in the audits
  double audit = 1e-8;
};

struct ExperimentConfig {
  KernelSpec kernel;
  ConfinementSpec confinement;
  double beta = 1.0;
  Grid1D grid;
  DynamicsConfig dynamics;
  EnsembleConfig ensemble;
  TheoryConstants constants;
  ToleranceConfig tolerances;
  std::string output_dir = "out";
  int threads = 0;  // 0: machine cores
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errs);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

// Parses and validates; throws ConfigError listing all problems.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical text form; parse(print(c)) reproduces c exactly.
std::string print_config(const ExperimentConfig& c);

}  // namespace chaoslab

#endif
