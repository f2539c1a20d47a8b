#ifndef CHAOSLAB_MEANFIELD_HPP
#define CHAOSLAB_MEANFIELD_HPP

#include "chaoslab/equilibrium.hpp"
#include "chaoslab/grid.hpp"

// Finite-volume evolution of the mean-field equation
//   dmu/dt = div((grad g*mu + grad V) mu) + (1/beta) Lap mu
// with Chang-Cooper exponential-fitting fluxes.  Faces carry the increment of
// the frozen potential U = V + g*mu, so the discrete Gibbs state
// exp(-beta U)/Z is an exact steady state of a step.

namespace chaoslab {

struct MeanFieldState {
  double t = 0.0;
  GridDensity mu;
  GridField u;              // velocity (1/beta) grad log mu + grad V + grad g*mu
  double sup_norm = 0.0;    // ||mu||_inf
  double sup_u = 0.0;       // sup |u| over the effective support
  double grad_u_sup = 0.0;  // sup |grad u| over the effective support
  int excluded_cells = 0;   // cells below the density floor, skipped by the sup norms
};

struct MeanFieldOptions {
  bool semi_implicit = true;  // implicit flux solve; explicit mode enforces CFL
  double density_floor = 1e-14;
};

class MeanFieldSolver {
 public:
  MeanFieldSolver(KernelSpec spec, ConfinementSpec V, double beta, const Grid1D& grid,
                  MeanFieldOptions opt = {});

  // Builds a full state (velocity and norms included) from a density.
  MeanFieldState make_state(GridDensity mu, double t = 0.0) const;

  // One step; the convolution is refreshed from the current density.
  MeanFieldState step(const MeanFieldState& state, double dt) const;

  double free_energy_of(const GridDensity& mu) const;

  const KernelSpec& kernel() const { return spec_; }
  const ConfinementSpec& confinement() const { return V_; }
  double beta() const { return beta_; }
  const Grid1D& grid() const { return grid_; }
  const KernelTable& table() const { return table_; }

 private:
  KernelSpec spec_;
  ConfinementSpec V_;
  double beta_;
  Grid1D grid_;
  MeanFieldOptions opt_;
  KernelTable table_;
  std::vector<double> vcell_;  // V at cell centers
};

// lhs: finite-difference d/dt of the mean-field free energy between two
// consecutive states; rhs: -Int |u|^2 dmu averaged over the two states.
std::pair<double, double> mf_dissipation(const MeanFieldSolver& solver,
                                         const MeanFieldState& before,
                                         const MeanFieldState& after);

// (sup |u|, sup |grad u|) over cells above the density floor; the number of
// excluded cells is written to *excluded when non-null.
std::pair<double, double> velocity_norms(const MeanFieldState& state, double floor = 1e-14,
                                         int* excluded = nullptr);

double l1_distance(const GridDensity& a, const GridDensity& b);

}  // namespace chaoslab

#endif
