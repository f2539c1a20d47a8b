#include "chaoslab/meanfield.hpp"

#include <cassert>
#include <cmath>

namespace chaoslab {

namespace {

// Chang-Cooper weight: delta(w) = 1/w - 1/(e^w - 1), delta(0) = 1/2.
double cc_delta(double w) {
  if (std::abs(w) < 1e-8) return 0.5 - w / 12.0;
  return 1.0 / w - 1.0 / std::expm1(w);
}

void thomas_solve(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
                  std::vector<double>& rhs) {
  const size_t n = diag.size();
  for (size_t k = 1; k < n; ++k) {
    double m = sub[k] / diag[k - 1];
    diag[k] -= m * sup[k - 1];
    rhs[k] -= m * rhs[k - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (size_t k = n - 1; k-- > 0;) rhs[k] = (rhs[k] - sup[k] * rhs[k + 1]) / diag[k];
}

}  // namespace

MeanFieldSolver::MeanFieldSolver(KernelSpec spec, ConfinementSpec V, double beta,
                                 const Grid1D& grid, MeanFieldOptions opt)
    : spec_(spec),
      V_(V),
      beta_(beta),
      grid_(grid),
      opt_(opt),
      table_(KernelTable::build(spec, grid)) {
  if (!(beta > 0.0)) throw std::invalid_argument("meanfield: beta must be > 0");
  vcell_.resize(size_t(grid.n));
  for (int k = 0; k < grid.n; ++k) vcell_[size_t(k)] = confinement_eval1(V_, grid.center(k));
}

MeanFieldState MeanFieldSolver::make_state(GridDensity mu, double t) const {
  if (!(mu.grid == grid_)) throw std::invalid_argument("meanfield: density grid mismatch");
  MeanFieldState st;
  st.t = t;
  st.sup_norm = mu.sup_norm();

  const int n = grid_.n;
  GridField conv = convolve_kernel(table_, mu);
  GridField logmu = log_density(mu, opt_.density_floor);
  GridField dlog = grad_field(logmu);
  GridField dconv = grad_field(conv);
  st.u = GridField{grid_, std::vector<double>(size_t(n), 0.0)};
  for (int k = 0; k < n; ++k)
    st.u[k] = dlog[k] / beta_ + confinement_grad1(V_, grid_.center(k)) + dconv[k];
  st.mu = std::move(mu);
  auto norms = velocity_norms(st, opt_.density_floor, &st.excluded_cells);
  st.sup_u = norms.first;
  st.grad_u_sup = norms.second;
  return st;
}

MeanFieldState MeanFieldSolver::step(const MeanFieldState& state, double dt) const {
  const int n = grid_.n;
  const double h = grid_.h();
  const double D = 1.0 / beta_;
  if (!opt_.semi_implicit && dt > 0.5 * h * h * beta_ * (1.0 + 1e-12))
    throw std::invalid_argument("meanfield: explicit step violates the CFL bound h^2 beta/2");

  GridField conv = convolve_kernel(table_, state.mu);

  // face coefficients: flux F_{k+1/2} = c1_k mu_k + c2_k mu_{k+1}
  std::vector<double> c1(size_t(n - 1)), c2(size_t(n - 1));
  for (int k = 0; k + 1 < n; ++k) {
    double dU = (vcell_[size_t(k + 1)] + conv[k + 1]) - (vcell_[size_t(k)] + conv[k]);
    double w = beta_ * dU;
    double a = dU / h;
    double delta = cc_delta(w);
    c1[size_t(k)] = a * delta - D / h;
    c2[size_t(k)] = a * (1.0 - delta) + D / h;
  }

  std::vector<double> next(size_t(n), 0.0);
  if (opt_.semi_implicit) {
    // (I - dt L) mu_next = mu, L the conservative flux divergence
    std::vector<double> sub(size_t(n), 0.0), diag(size_t(n), 1.0), sup(size_t(n), 0.0);
    for (int k = 0; k < n; ++k) {
      double dkk = 0.0;
      if (k + 1 < n) {
        dkk += c1[size_t(k)];
        sup[size_t(k)] = -dt * c2[size_t(k)] / h;
      }
      if (k > 0) {
        dkk -= c2[size_t(k - 1)];
        sub[size_t(k)] = dt * c1[size_t(k - 1)] / h;
      }
      diag[size_t(k)] = 1.0 - dt * dkk / h;
      next[size_t(k)] = state.mu[k];
    }
    thomas_solve(sub, diag, sup, next);
  } else {
    for (int k = 0; k < n; ++k) {
      double fr = (k + 1 < n) ? c1[size_t(k)] * state.mu[k] + c2[size_t(k)] * state.mu[k + 1] : 0.0;
      double fl = (k > 0) ? c1[size_t(k - 1)] * state.mu[k - 1] + c2[size_t(k - 1)] * state.mu[k]
                          : 0.0;
      next[size_t(k)] = state.mu[k] + dt * (fr - fl) / h;
    }
  }

  for (int k = 0; k < n; ++k) {
    // the scheme is positivity-preserving; a negative here is a bug
    assert(next[size_t(k)] > -1e-12);
    if (next[size_t(k)] < 0.0) next[size_t(k)] = 0.0;
  }
  MeanFieldState out = make_state(GridDensity{grid_, std::move(next)}, state.t + dt);
  return out;
}

double MeanFieldSolver::free_energy_of(const GridDensity& mu) const {
  return free_energy(mu, table_, V_, beta_);
}

std::pair<double, double> mf_dissipation(const MeanFieldSolver& solver,
                                         const MeanFieldState& before,
                                         const MeanFieldState& after) {
  const double dt = after.t - before.t;
  if (!(dt > 0.0)) throw std::invalid_argument("mf_dissipation: states must be consecutive");
  double lhs = (solver.free_energy_of(after.mu) - solver.free_energy_of(before.mu)) / dt;
  auto usq = [&](const MeanFieldState& st) {
    double acc = 0.0;
    for (int k = 0; k < st.mu.n(); ++k)
      if (st.mu[k] > 1e-14) acc += st.u[k] * st.u[k] * st.mu[k];
    return acc * st.mu.grid.h();
  };
  double rhs = -0.5 * (usq(before) + usq(after));
  return {lhs, rhs};
}

std::pair<double, double> velocity_norms(const MeanFieldState& state, double floor,
                                         int* excluded) {
  const int n = state.mu.n();
  const double h = state.mu.grid.h();
  double su = 0.0, sgu = 0.0;
  int skipped = 0;
  // u[k] chains two centered differences, so its value at cell k depends on
  // cells k-2..k+2; a cell only counts toward the sup norms when that whole
  // stencil is above the floor (otherwise the log-floor clamp and the
  // one-sided boundary differences leak O(1/h) artifacts into the norms).
  auto clean = [&](int k) {
    if (k < 0 || k >= n) return false;
    for (int j = std::max(0, k - 2); j <= std::min(n - 1, k + 2); ++j)
      if (!(state.mu[j] > floor)) return false;
    return true;
  };
  for (int k = 0; k < n; ++k) {
    if (state.mu[k] <= floor) {
      ++skipped;
      continue;
    }
    if (k >= 1 && k + 1 < n && clean(k)) su = std::max(su, std::abs(state.u[k]));
    if (k >= 2 && k + 2 < n && clean(k - 1) && clean(k + 1))
      sgu = std::max(sgu, std::abs(state.u[k + 1] - state.u[k - 1]) / (2.0 * h));
  }
  if (excluded) *excluded = skipped;
  return {su, sgu};
}

double l1_distance(const GridDensity& a, const GridDensity& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("l1_distance: grid mismatch");
  double acc = 0.0;
  for (int k = 0; k < a.n(); ++k) acc += std::abs(a[k] - b[k]);
  return acc * a.grid.h();
}

}  // namespace chaoslab
