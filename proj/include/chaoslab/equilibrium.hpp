#ifndef CHAOSLAB_EQUILIBRIUM_HPP
#define CHAOSLAB_EQUILIBRIUM_HPP

#include "chaoslab/grid.hpp"

// Thermal equilibrium measure mu_beta, mean-field free energy, the effective
// confinement of the modulated Gibbs measure, and the convexity constant
// certifying a uniform modulated LSI.

namespace chaoslab {

struct EquilibriumResult {
  GridDensity mu_beta;
  double c_beta = 0.0;    // the additive constant of the characterization
  double residual = 0.0;  // sup over the support of |g*mu + V + (1/beta)log mu - c_beta|
  int iterations = 0;
};

struct EquilibriumOptions {
  double tol = 1e-10;
  double theta = 0.5;  // damping of the fixed-point iteration, in (0,1]
  int max_iter = 10000;
  double support_floor = 1e-12;  // relative to sup norm; residual is taken on mu above it
};

// Damped fixed point  mu <- (1-theta) mu + theta normalize(exp(-beta (g*mu + V))).
// Throws on non-convergence (message carries the last residual) and on
// exp-range overflow of beta*V over the grid.
EquilibriumResult solve_thermal_equilibrium(const KernelSpec& spec, const ConfinementSpec& V,
                                            double beta, const Grid1D& grid,
                                            const EquilibriumOptions& opt = {});

// (1/2) Int Int g dmu dmu + Int V dmu + (1/beta) Int mu log mu
double free_energy(const GridDensity& mu, const KernelSpec& spec, const ConfinementSpec& V,
                   double beta);
double free_energy(const GridDensity& mu, const KernelTable& table, const ConfinementSpec& V,
                   double beta);

// V_{mu,beta} = -g*mu - (1/beta) log mu on cell centers.
// Throws if mu has interior zeros (support must be an interval on the grid).
GridField effective_confinement(const GridDensity& mu, const KernelSpec& spec, double beta);

struct LsiEstimate {
  double kappa = 0.0;  // inf V'' - correction seminorms
  double c_ls = 0.0;   // 2/(beta*kappa) when kappa > 0
  bool valid = false;  // kappa > 0
  // the three summands, exposed for testing
  double inf_v_pp = 0.0;
  double log_ratio_seminorm = 0.0;  // (1/beta) || log(mu/mu_beta) ||_{C^2}
  double conv_diff_seminorm = 0.0;  // || g*(mu - mu_beta) ||_{C^2}
};

// kappa-convexity of V_{mu,beta} via the perturbative bound around mu_beta;
// inf V'' is taken over the grid window (a documented convention).
LsiEstimate convexity_constant(const GridDensity& mu, const GridDensity& mu_beta,
                               const ConfinementSpec& V, const KernelSpec& spec, double beta);

}  // namespace chaoslab

#endif
