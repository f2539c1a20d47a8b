#ifndef CHAOSLAB_PARTICLES_HPP
#define CHAOSLAB_PARTICLES_HPP

#include <functional>
#include <vector>

#include "chaoslab/grid.hpp"
#include "chaoslab/rng.hpp"

// N-particle Langevin SDE, Metropolis-adjusted Langevin samplers for the
// Gibbs and modulated Gibbs measures, and deterministic ensembles.

namespace chaoslab {

struct ParticleConfig {
  int N = 1;
  int d = 1;
  std::vector<double> x;  // N*d, particle-major

  double& at(int i, int k) { return x[size_t(i * d + k)]; }
  double at(int i, int k) const { return x[size_t(i * d + k)]; }
  bool pairwise_distinct() const;
  // true when the 1D coordinates are weakly sorted (the Weyl chamber)
  bool ordered_1d() const;
};

// (1/2N) sum_{i != j} g + sum_i V
double particle_energy(const ParticleConfig& cfg, const KernelSpec& spec,
                       const ConfinementSpec& V);

struct SdeOptions {
  bool zero_noise = false;  // beta = infinity: pure gradient flow
  int max_halvings = 4;     // dt_min = dt * 2^-4, then chamber reflection (sort)
};

// One Euler-Maruyama step.  In d=1 with singular kernels an order-violating
// proposal is retried with dt/2 (recursively covering the full dt); at the
// halving floor the configuration is reflected into the ordered chamber by
// sorting, which is exact in law for exchangeable particles.
ParticleConfig sde_step(const ParticleConfig& cfg, const KernelSpec& spec,
                        const ConfinementSpec& V, double beta, double dt, CounterRng& rng,
                        const SdeOptions& opt = {});

// Inverse-CDF sample of a grid density (piecewise-uniform within cells).
double sample_density(const GridDensity& mu, CounterRng& rng);
ParticleConfig sample_iid(const GridDensity& mu, int N, CounterRng& rng);

enum class MalaTarget { Gibbs, Modulated };

struct MalaOptions {
  bool metropolis = true;  // disabling exposes the discretization bias (test hook)
  double min_acceptance = 0.01;
  int acceptance_window = 1000;
};

// Metropolis-adjusted Langevin chain.
//   Gibbs:      log-density -beta H_N(X)
//   Modulated:  log-density -beta N F_N(X, mu) + sum_i log mu(x_i)
// (log mu interpolated linearly between cell centers; proposals leaving the
// support window are rejected).  1D only.
class MalaSampler {
 public:
  MalaSampler(MalaTarget target, const KernelSpec& spec, const ConfinementSpec& V,
              const GridDensity* mu, double beta, double dt, MalaOptions opt = {});

  // one proposal/accept step; returns whether the proposal was accepted
  bool step(ParticleConfig& cfg, CounterRng& rng);

  // n_steps steps, recording every `thin`-th configuration.  Throws a
  // mixing-failure error if acceptance drops below the configured minimum.
  std::vector<ParticleConfig> run(ParticleConfig cfg, int n_steps, int thin, CounterRng& rng);

  double acceptance_rate() const {
    return attempts_ ? double(accepts_) / double(attempts_) : 0.0;
  }
  double log_target(const ParticleConfig& cfg) const;

 private:
  void grad_log_target(const ParticleConfig& cfg, std::vector<double>& out) const;

  MalaTarget target_;
  KernelSpec spec_;
  ConfinementSpec V_;
  const GridDensity* mu_;
  double beta_, dt_;
  MalaOptions opt_;
  long accepts_ = 0, attempts_ = 0;
};

enum class DynamicsKind { Sde, Mala };

struct EnsembleParams {
  DynamicsKind dynamics = DynamicsKind::Sde;
  int N = 16;
  int M = 8;  // replicas
  double dt = 1e-3;
  double t_end = 1.0;
  double snapshot_dt = 0.1;
  uint64_t master_seed = 1;
  double beta = 1.0;
  MalaTarget mala_target = MalaTarget::Modulated;
  int threads = 0;  // 0: hardware concurrency
};

struct EnsembleSnapshot {
  double t = 0.0;
  std::vector<ParticleConfig> replicas;
};

// M independent trajectories with per-replica RNG streams; deterministic for
// a fixed (master_seed, params) regardless of thread count.  The initial
// configuration of replica r is drawn from `init` with that replica's stream.
std::vector<EnsembleSnapshot> run_ensemble(
    const std::function<ParticleConfig(CounterRng&)>& init, const KernelSpec& spec,
    const ConfinementSpec& V, const GridDensity* mu, const EnsembleParams& params);

}  // namespace chaoslab

#endif
