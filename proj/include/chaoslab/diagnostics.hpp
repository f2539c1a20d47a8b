#ifndef CHAOSLAB_DIAGNOSTICS_HPP
#define CHAOSLAB_DIAGNOSTICS_HPP

#include "chaoslab/grid.hpp"
#include "chaoslab/particles.hpp"

// Scalar functionals of particle configurations and densities: modulated
// energy, partition-function estimates, exponential moments, the commutator
// functional, Riesz error terms, and marginal distances.

namespace chaoslab {

struct ModulatedEnergyBreakdown {
  double pair_sum = 0.0;    // (1/2N^2) sum_{i!=j} g(x_i, x_j)
  double cross = 0.0;       // (1/N) sum_i (g*mu)(x_i)
  double background = 0.0;  // (1/2) Int Int g dmu dmu
  double total = 0.0;       // pair_sum - cross + background
};

// F_N(X_N, mu) with the self-interaction removed; d=1 with grid mu.
ModulatedEnergyBreakdown modulated_energy(const ParticleConfig& cfg, const GridDensity& mu,
                                          const KernelSpec& spec);

// Diagonal-included variant for kernels continuous at the diagonal;
// equals modulated.total + (1/2N^2) sum_i g(x_i, x_i).
double unrenormalized_energy(const ParticleConfig& cfg, const GridDensity& mu,
                             const KernelSpec& spec);

struct TheoryConstants {
  double c_riesz = 1.0;      // the absolute constant of the Riesz lower bound
  double c_re = 0.0;         // relative-entropy coefficient of the commutator bound
  double c_me = 1.0;         // modulated-energy coefficient of the commutator bound
  double c_beta_assm = 0.0;  // the constant C_beta in [0, 1/beta)
  void validate(double beta) const {
    if (!(c_riesz > 0.0)) throw std::invalid_argument("constants: c_riesz must be > 0");
    if (!(c_beta_assm * beta < 1.0))
      throw std::invalid_argument("constants: c_beta_assm * beta must be < 1");
  }
};

enum class RieszMode { Log, Supercoulomb, Subcoulomb };
RieszMode riesz_mode(const KernelSpec& spec);

// The (negative) lower-bound value for F_N.  The additive error o_N(1) is
// its negation.
double riesz_lower_bound(int N, double sup_mu, const KernelSpec& spec,
                         const TheoryConstants& constants);

struct ErrorTerms {
  double o_n = 0.0;
  RieszMode mode = RieszMode::Log;
};

// o_N(1) from the Riesz-branch formulas.  The sub-Coulomb branch needs the
// density for its discrete fractional-Laplacian sup norm; the sup-norm-only
// overload covers the log/super-Coulomb cases.
ErrorTerms error_terms(int N, double sup_mu, const KernelSpec& spec,
                       const TheoryConstants& constants);
ErrorTerms error_terms(int N, const GridDensity& mu, const KernelSpec& spec,
                       const TheoryConstants& constants);

// Two-sided Grunwald-Letnikov discrete fractional Laplacian (-Lap)^{alpha/2},
// operator order alpha in (0,2); an interior approximation, documented as such.
GridField fractional_laplacian(const GridField& f, double alpha);

struct LogPartitionEstimate {
  double estimate = 0.0;   // log K_{N,beta}(mu)
  double std_error = 0.0;  // jackknife
  double ess = 0.0;        // effective sample size of the importance weights
};

// Importance sampling from mu^{tensor N}.  N <= 16; throws when the
// effective sample size drops below 30.
LogPartitionEstimate log_partition_estimate(const GridDensity& mu, const KernelSpec& spec,
                                            double beta, int N, int M_samples, CounterRng& rng);

struct ExpMomentCheck {
  double lhs = 0.0;  // log E_Q[e^{(beta/2) N F_N}]
  double lhs_error = 0.0;
  double rhs = 0.0;  // log K_{N,beta/2} - log K_{N,beta}
  double rhs_error = 0.0;
};

// The exact exponential-moment identity, evaluated from stationary samples of
// the modulated Gibbs measure plus two importance-sampling partition runs.
ExpMomentCheck exponential_moment_check(const GridDensity& mu, const KernelSpec& spec, double beta,
                                        int N, const std::vector<ParticleConfig>& q_samples,
                                        int M_is, CounterRng& rng);

// Int Int_{x != y} (v(x)-v(y)) g'(x-y) d(emp - mu)(x) d(emp - mu)(y),
// exact per-cell primitives for the singular parts; d=1.
double commutator_functional(const GridField& v, const ParticleConfig& cfg, const GridDensity& mu,
                             const KernelSpec& spec);

struct MarginalDistances {
  double w2 = 0.0;  // exact 1D Wasserstein-2 (k=1 only)
  double tv = 0.0;
  double kl = 0.0;
};

// Pooled k-marginal of the snapshots vs reference^{tensor k}; 64^k histogram
// bins with additive smoothing 1/2.  k in {1,2}; needs >= 2000 samples for
// k=1 and >= 100 * 64^2 for k=2.
MarginalDistances marginal_distances(const std::vector<ParticleConfig>& configs,
                                     const GridDensity& reference, int k);

// Smallest c_riesz for which every sampled F_N respects the lower bound.
double calibrate_c_riesz(const std::vector<double>& f_n_samples, int N, double sup_mu,
                         const KernelSpec& spec);

// Smallest c_me with |commutator| <= sup|grad v| * c_me * (F_N + o_N) over samples.
double calibrate_c_me(const std::vector<double>& commutator_values,
                      const std::vector<double>& f_n_values, double grad_v_sup, double o_n);

}  // namespace chaoslab

#endif
