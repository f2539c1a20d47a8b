#include "chaoslab/equilibrium.hpp"

#include <algorithm>
#include <cmath>

namespace chaoslab {

namespace {

GridField confinement_field(const ConfinementSpec& V, const Grid1D& grid) {
  GridField f{grid, std::vector<double>(size_t(grid.n))};
  for (int k = 0; k < grid.n; ++k) f[k] = confinement_eval1(V, grid.center(k));
  return f;
}

}  // namespace

EquilibriumResult solve_thermal_equilibrium(const KernelSpec& spec, const ConfinementSpec& V,
                                            double beta, const Grid1D& grid,
                                            const EquilibriumOptions& opt) {
  if (!(beta > 0.0)) throw std::invalid_argument("equilibrium: beta must be > 0");
  const auto table = KernelTable::build(spec, grid);
  const auto vfield = confinement_field(V, grid);
  const int n = grid.n;

  for (int k = 0; k < n; ++k)
    if (beta * vfield[k] > 700.0)
      throw std::overflow_error("equilibrium: beta*V exceeds exp range; rescale the grid window");

  // start from the pure-confinement Gibbs density
  std::vector<double> vals(size_t(n), 0.0);
  for (int k = 0; k < n; ++k) vals[size_t(k)] = std::exp(-beta * vfield[k]);
  GridDensity mu = GridDensity::from_values(grid, std::move(vals));

  double residual = kInf;
  double c_beta = 0.0;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    GridField conv = convolve_kernel(table, mu);

    // residual of the characterization on the current support
    const double floor = opt.support_floor * mu.sup_norm();
    double mass_on_support = 0.0, mean = 0.0;
    for (int k = 0; k < n; ++k)
      if (mu[k] > floor) {
        double fk = conv[k] + vfield[k] + std::log(mu[k]) / beta;
        mean += mu[k] * fk;
        mass_on_support += mu[k];
      }
    c_beta = mean / mass_on_support;
    residual = 0.0;
    for (int k = 0; k < n; ++k)
      if (mu[k] > floor) {
        double fk = conv[k] + vfield[k] + std::log(mu[k]) / beta;
        residual = std::max(residual, std::abs(fk - c_beta));
      }
    if (residual < opt.tol) break;

    // damped update toward normalize(exp(-beta (g*mu + V)))
    double m = -kInf;
    for (int k = 0; k < n; ++k) m = std::max(m, -beta * (conv[k] + vfield[k]));
    std::vector<double> next(size_t(n), 0.0);
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      next[size_t(k)] = std::exp(-beta * (conv[k] + vfield[k]) - m);
      sum += next[size_t(k)];
    }
    const double scale = 1.0 / (sum * grid.h());
    for (int k = 0; k < n; ++k)
      mu.values[size_t(k)] = (1.0 - opt.theta) * mu[k] + opt.theta * next[size_t(k)] * scale;
  }
  if (residual >= opt.tol)
    throw std::runtime_error("equilibrium: no convergence after " + std::to_string(opt.max_iter) +
                             " iterations, residual " + std::to_string(residual));
  return EquilibriumResult{std::move(mu), c_beta, residual, it + 1};
}

double free_energy(const GridDensity& mu, const KernelTable& table, const ConfinementSpec& V,
                   double beta) {
  double pot = 0.0;
  for (int k = 0; k < mu.n(); ++k) pot += mu[k] * confinement_eval1(V, mu.grid.center(k));
  pot *= mu.grid.h();
  return 0.5 * double_integral(table, mu, mu) + pot + entropy(mu) / beta;
}

double free_energy(const GridDensity& mu, const KernelSpec& spec, const ConfinementSpec& V,
                   double beta) {
  return free_energy(mu, KernelTable::build(spec, mu.grid), V, beta);
}

GridField effective_confinement(const GridDensity& mu, const KernelSpec& spec, double beta) {
  // support must be one interval of strictly positive cells
  int first = -1, last = -1;
  for (int k = 0; k < mu.n(); ++k)
    if (mu[k] > 0.0) {
      if (first < 0) first = k;
      last = k;
    }
  for (int k = first; k <= last; ++k)
    if (!(mu[k] > 0.0))
      throw std::invalid_argument("effective_confinement: mu has interior zeros");
  GridField conv = convolve_kernel(spec, mu);
  GridField out{mu.grid, std::vector<double>(size_t(mu.n()), 0.0)};
  auto logmu = log_density(mu);
  for (int k = 0; k < mu.n(); ++k) out[k] = -conv[k] - logmu[k] / beta;
  return out;
}

LsiEstimate convexity_constant(const GridDensity& mu, const GridDensity& mu_beta,
                               const ConfinementSpec& V, const KernelSpec& spec, double beta) {
  if (!(mu.grid == mu_beta.grid))
    throw std::invalid_argument("convexity_constant: mu and mu_beta on different grids");
  const int n = mu.n();
  const double floor = 1e-14;
  for (int k = 0; k < n; ++k)
    if ((mu[k] > floor) != (mu_beta[k] > floor))
      throw std::invalid_argument("convexity_constant: support mismatch between mu and mu_beta");

  LsiEstimate est;
  est.inf_v_pp = kInf;
  for (int k = 0; k < n; ++k)
    est.inf_v_pp = std::min(est.inf_v_pp, confinement_hess1(V, mu.grid.center(k)));

  // log(mu/mu_beta) on the common support, extended constantly off-support
  // so the boundary does not pollute the second difference
  GridField lr{mu.grid, std::vector<double>(size_t(n), 0.0)};
  int first = -1, last = -1;
  for (int k = 0; k < n; ++k)
    if (mu[k] > floor) {
      lr[k] = std::log(mu[k] / mu_beta[k]);
      if (first < 0) first = k;
      last = k;
    }
  for (int k = 0; k < first; ++k) lr[k] = lr[first];
  for (int k = last + 1; k < n; ++k) lr[k] = lr[last];
  est.log_ratio_seminorm = c2_seminorm(lr) / beta;

  std::vector<double> diff(size_t(n), 0.0);
  for (int k = 0; k < n; ++k) diff[size_t(k)] = mu[k] - mu_beta[k];
  auto table = KernelTable::build(spec, mu.grid);
  est.conv_diff_seminorm = c2_seminorm(convolve_signed(table, diff));

  est.kappa = est.inf_v_pp - (est.log_ratio_seminorm + est.conv_diff_seminorm);
  est.valid = est.kappa > 0.0;
  est.c_ls = est.valid ? 2.0 / (beta * est.kappa) : 0.0;
  return est;
}

}  // namespace chaoslab
