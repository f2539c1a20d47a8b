// Acceptance suite: ten end-to-end checks of the laboratory, one printed
// pass/fail line each.  Numerical targets come from independent oracles
// (closed-form Gaussian dynamics, tensor-exact partition sums, Monte Carlo
// error bars) rather than from the code under test.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "chaoslab/config.hpp"
#include "chaoslab/diagnostics.hpp"
#include "chaoslab/equilibrium.hpp"
#include "chaoslab/grid.hpp"
#include "chaoslab/kernels.hpp"
#include "chaoslab/liouville.hpp"
#include "chaoslab/meanfield.hpp"
#include "chaoslab/particles.hpp"
#include "chaoslab/rng.hpp"

namespace fs = std::filesystem;
using namespace chaoslab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

fs::path configs_dir() {
  for (const char* c : {"configs", "../configs", "../../configs"})
    if (fs::exists(fs::path(c) / "log_n2.toml")) return c;
  throw std::runtime_error("configs directory not found relative to cwd");
}

GridDensity tilt(const GridDensity& mu, double eps) {
  std::vector<double> v(size_t(mu.grid.n));
  for (int k = 0; k < mu.grid.n; ++k) v[size_t(k)] = mu[k] * std::exp(eps * mu.grid.center(k));
  double m = 0.0;
  for (double x : v) m += x * mu.grid.h();
  for (double& x : v) x /= m;
  return GridDensity::from_values(mu.grid, v);
}

GridDensity gaussian(const Grid1D& g, double var) {
  auto d = GridDensity::from_function(
      g, [&](double x) { return std::exp(-0.5 * x * x / var) / std::sqrt(2 * M_PI * var); });
  double m = d.mass();
  std::vector<double> v(size_t(g.n));
  for (int k = 0; k < g.n; ++k) v[size_t(k)] = d[k] / m;
  return GridDensity::from_values(g, v);
}

double grid_variance(const GridDensity& mu) {
  double m1 = 0.0, m2 = 0.0;
  for (int k = 0; k < mu.grid.n; ++k) {
    double x = mu.grid.center(k), w = mu[k] * mu.grid.h();
    m1 += x * w;
    m2 += x * x * w;
  }
  return m2 - m1 * m1;
}

// ------------------------------------------------------------------ 1
// Modulated free energy equals (relative entropy to the modulated Gibbs
// measure minus log K / N) / beta, over random densities and references.
Outcome rewriting_identity() {
  Grid1D grid{-3.0, 3.0, 256};
  auto spec = KernelSpec::log_kernel();
  auto V = ConfinementSpec::quadratic(2.0);
  auto eq = solve_thermal_equilibrium(spec, V, 1.0, grid);
  CounterRng rng = CounterRng::stream(20260826, 1);

  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    double beta = 0.5 + 1.5 * rng.uniform();
    GridDensity mu = tilt(eq.mu_beta, -1.0 + 2.0 * rng.uniform());
    double eps = 0.5 + 1.5 * rng.uniform();
    JointDensity f = (trial % 2 == 0)
                         ? build_mixture(tilt(mu, eps), tilt(mu, -eps))
                         : build_product(tilt(mu, eps), 2);
    auto rec = modulated_free_energy(f, mu, spec, beta);
    double log_k = log_partition_tensor(mu, spec, beta, 2);
    JointDensity q = build_modulated_gibbs(mu, spec, beta, 2);
    double rewritten = (relative_entropy(f, q) - log_k / 2.0) / beta;
    worst = std::max(worst, std::abs(rec.e_n - rewritten) / (1.0 + std::abs(rec.e_n)));
  }
  return {worst < 1e-6, fmt("max normalized error %.2e over 20 pairs (tol 1e-6)", worst)};
}

// ------------------------------------------------------------------ 2
// Thermal equilibrium: characterization residual and minimizer property.
Outcome thermal_equilibrium() {
  Grid1D grid{-3.0, 3.0, 256};
  auto spec = KernelSpec::log_kernel();
  auto V = ConfinementSpec::quadratic(2.0);
  CounterRng rng = CounterRng::stream(20260826, 2);

  double worst_res = 0.0, worst_gap = 1e300;
  for (double beta : {0.5, 1.0, 2.0}) {
    auto eq = solve_thermal_equilibrium(spec, V, beta, grid);
    worst_res = std::max(worst_res, eq.residual);
    double f0 = free_energy(eq.mu_beta, spec, V, beta);
    for (int p = 0; p < 20; ++p) {
      double c = -2.0 + 4.0 * rng.uniform();
      double w = 0.2 + 0.8 * rng.uniform();
      double a = 0.05 * (2.0 * rng.uniform() - 1.0);
      std::vector<double> v(size_t(grid.n));
      double m = 0.0;
      for (int k = 0; k < grid.n; ++k) {
        double x = grid.center(k);
        v[size_t(k)] = eq.mu_beta[k] * (1.0 + a * std::exp(-(x - c) * (x - c) / (w * w)));
        m += v[size_t(k)] * grid.h();
      }
      for (double& val : v) val /= m;
      double fp = free_energy(GridDensity::from_values(grid, v), spec, V, beta);
      worst_gap = std::min(worst_gap, fp - f0);
    }
  }
  bool pass = worst_res < 1e-8 && worst_gap > -1e-12;
  return {pass, fmt("max residual %.2e (tol 1e-8), min perturbation gap %.2e", worst_res,
                    worst_gap)};
}

// ------------------------------------------------------------------ 3
// Mean-field solver: Gaussian variance oracle for the interaction-free flow,
// and free-energy monotonicity on every shipped configuration.
Outcome meanfield_dissipation() {
  Grid1D g{-6.0, 6.0, 512};
  auto zero = KernelSpec::smooth(SmoothTable::Zero);
  auto V = ConfinementSpec::quadratic(2.0);  // V = x^2
  MeanFieldSolver ou(zero, V, 1.0, g);
  double s0 = 0.125, dt = 1e-4, t_end = 0.5;
  auto st = ou.make_state(gaussian(g, s0));
  long steps = std::lround(t_end / dt);
  for (long i = 0; i < steps; ++i) st = ou.step(st, dt);
  double analytic = 0.5 + (s0 - 0.5) * std::exp(-4.0 * t_end);
  double rel = std::abs(grid_variance(st.mu) - analytic) / analytic;

  double worst_uptick = 0.0;
  std::string files;
  for (const auto& entry : fs::directory_iterator(configs_dir())) {
    if (entry.path().extension() != ".toml") continue;
    files += files.empty() ? entry.path().filename().string() : "," + entry.path().filename().string();
    auto cfg = load_config(entry.path().string());
    MeanFieldSolver solver(cfg.kernel, cfg.confinement, cfg.beta, cfg.grid);
    std::vector<double> v(size_t(cfg.grid.n));
    double m = 0.0;
    for (int k = 0; k < cfg.grid.n; ++k) {
      v[size_t(k)] = std::exp(-cfg.beta * confinement_eval1(cfg.confinement, cfg.grid.center(k)));
      m += v[size_t(k)] * cfg.grid.h();
    }
    for (double& val : v) val /= m;
    auto state = solver.make_state(GridDensity::from_values(cfg.grid, v));
    double horizon = std::min(cfg.dynamics.t_end, 2.0);
    long n = std::lround(horizon / cfg.dynamics.dt);
    double prev = solver.free_energy_of(state.mu);
    for (long i = 0; i < n; ++i) {
      state = solver.step(state, cfg.dynamics.dt);
      double cur = solver.free_energy_of(state.mu);
      worst_uptick = std::max(worst_uptick, cur - prev);
      prev = cur;
    }
  }
  bool pass = rel < 1e-3 && worst_uptick <= 1e-10;
  return {pass, fmt("variance error %.2e (tol 1e-3), worst free-energy uptick %.2e", rel,
                    worst_uptick) + " [" + files + "]"};
}

// Shared joint Fokker-Planck trajectory on the shipped two-particle
// log-kernel configuration: non-product mixture start, reference flow at
// equilibrium, all audit inputs recorded per snapshot.
struct JointTrajectory {
  std::vector<FreeEnergyRecord> records;
  GronwallInputs gin;
  double log_k = 0.0, kappa_min = 0.0, c_ls = 0.0, tol_disc = 0.0, audit_tol = 0.0;
  double beta = 1.0;
  int N = 2;
};

const JointTrajectory& joint_trajectory() {
  static JointTrajectory traj = [] {
    auto cfg = load_config((configs_dir() / "log_n2.toml").string());
    JointTrajectory t;
    t.N = cfg.ensemble.N;
    t.beta = cfg.beta;
    auto eq = solve_thermal_equilibrium(cfg.kernel, cfg.confinement, cfg.beta, cfg.grid,
                                        {cfg.tolerances.equilibrium});
    const GridDensity& mu = eq.mu_beta;
    MeanFieldSolver solver(cfg.kernel, cfg.confinement, cfg.beta, cfg.grid);
    MeanFieldState mf = solver.make_state(mu);
    JointDensity f = build_mixture(tilt(mu, 2.0), tilt(mu, -2.0));

    t.log_k = log_partition_tensor(mu, cfg.kernel, cfg.beta, t.N);
    t.kappa_min = convexity_constant(mu, mu, cfg.confinement, cfg.kernel, cfg.beta).kappa;
    const double o_n = error_terms(t.N, mu, cfg.kernel, cfg.constants).o_n;

    const double dt = cfg.dynamics.dt;
    const int per_snap = std::max(1, int(std::llround(cfg.dynamics.snapshot_dt / dt)));
    const long steps = std::llround(cfg.dynamics.t_end / dt);
    for (long step = 0; step <= steps; ++step) {
      if (step % per_snap == 0 || step == steps) {
        FreeEnergyRecord rec = modulated_free_energy(f, mf.mu, cfg.kernel, cfg.beta);
        rec.t = step * dt;
        rec.e_script = rec.e_n + o_n;
        rec.fisher = modulated_fisher(f, mf.mu, cfg.kernel, cfg.beta);
        rec.commutator = joint_commutator(f, mf.u, mf.mu, cfg.kernel);
        t.records.push_back(rec);
        t.gin.o_n.push_back(o_n);
        t.gin.odot_n.push_back(0.0);  // stationary reference flow
        t.gin.u_star.push_back(cfg.constants.c_me * mf.grad_u_sup);
        t.gin.log_k.push_back(t.log_k);
        auto lsi = convexity_constant(mf.mu, mu, cfg.confinement, cfg.kernel, cfg.beta);
        t.kappa_min = std::min(t.kappa_min, lsi.kappa);
      }
      if (step == steps) break;
      f = liouville_step(f, cfg.kernel, cfg.confinement, cfg.beta, dt);
      mf = solver.step(mf, dt);
    }
    if (!(t.kappa_min > 0.0)) throw std::runtime_error("no convexity certificate on trajectory");
    t.c_ls = 2.0 / (cfg.beta * t.kappa_min);
    const double h = cfg.grid.h();
    t.tol_disc = cfg.tolerances.disc_c * (h * h + dt);
    t.audit_tol = cfg.tolerances.audit + t.tol_disc;
    return t;
  }();
  return traj;
}

// ------------------------------------------------------------------ 4
// Energy dissipation inequality holds at every snapshot of the joint run.
Outcome dissipation_inequality() {
  const auto& t = joint_trajectory();
  auto rep = dissipation_audit(t.records, t.beta, t.tol_disc);
  return {rep.violations == 0,
          fmt("%.0f violations over %.0f snapshots, worst margin %.3e", double(rep.violations),
              double(t.records.size()), rep.worst_margin)};
}

// ------------------------------------------------------------------ 5
// Entropy-to-Fisher chain via the convexity certificate, and the fitted
// entropy decay rate against the certified lower bound.
Outcome lsi_chain() {
  const auto& t = joint_trajectory();
  auto recs = t.records;
  auto rep = lsi_chain_audit(recs, t.gin.log_k, t.beta, t.N, t.c_ls, t.audit_tol);
  auto gw = gronwall_audit(recs, t.c_ls, t.beta, t.N, t.gin, t.audit_tol);
  double floor = 0.9 / (t.c_ls * t.beta);
  bool pass = rep.violations == 0 && gw.fitted_rate >= floor;
  return {pass, fmt("%.0f chain violations, fitted rate %.3f >= %.3f required",
                    double(rep.violations), gw.fitted_rate, floor)};
}

// ------------------------------------------------------------------ 6
// Generation of chaos from a non-product start: decay bound respected at
// every snapshot and near-total modulated-entropy dissipation by t = 10.
Outcome generation_of_chaos() {
  const auto& t = joint_trajectory();
  auto recs = t.records;
  auto gw = gronwall_audit(recs, t.c_ls, t.beta, t.N, t.gin, t.audit_tol);
  double h0_plain = recs.front().h_rel;  // entropy vs the product reference
  // entropy vs the modulated Gibbs state, from the rewriting identity
  double hq0 = t.beta * recs.front().e_n + t.log_k / t.N;
  double hqT = t.beta * recs.back().e_n + t.log_k / t.N;
  bool pass = h0_plain > 0.2 && gw.bound.violations == 0 && hqT < 0.01 * hq0;
  return {pass, fmt("initial entropy %.3f, %.0f bound violations, final/initial %.2e",
                    h0_plain, double(gw.bound.violations), hqT / hq0)};
}

// ------------------------------------------------------------------ 7
// Partition-function bounds: tensor-exact value and importance-sampling
// estimates between the Jensen floor and the repulsion-penalty ceiling.
Outcome partition_bounds() {
  Grid1D grid{-3.0, 3.0, 256};
  auto spec = KernelSpec::log_kernel();
  auto V = ConfinementSpec::quadratic(2.0);
  const double beta = 1.0;
  auto eq = solve_thermal_equilibrium(spec, V, beta, grid);
  const GridDensity& mu = eq.mu_beta;
  TheoryConstants tc;

  double floor = 0.5 * beta * double_integral(spec, mu, mu);
  double tensor2 = log_partition_tensor(mu, spec, beta, 2);
  double ceil2 = beta * 2 * error_terms(2, mu, spec, tc).o_n;
  bool pass = tensor2 >= floor - 1e-10 && tensor2 <= ceil2 + 1e-10;
  std::string detail = fmt("N=2 tensor %.4f in [%.4f, %.4f]", tensor2, floor, ceil2);

  CounterRng rng = CounterRng::stream(20260826, 7);
  auto is2 = log_partition_estimate(mu, spec, beta, 2, 40000, rng);
  pass = pass && std::abs(is2.estimate - tensor2) <= 3.0 * is2.std_error;
  detail += fmt("; IS-tensor gap %.4f (3se %.4f)", std::abs(is2.estimate - tensor2),
                3.0 * is2.std_error);
  for (int N : {4, 8}) {
    auto est = log_partition_estimate(mu, spec, beta, N, 40000, rng);
    double ceil = beta * N * error_terms(N, mu, spec, tc).o_n;
    bool ok = est.estimate >= floor - 3.0 * est.std_error &&
              est.estimate <= ceil + 3.0 * est.std_error;
    pass = pass && ok;
    detail += fmt("; N=%.0f IS %.4f", double(N), est.estimate);
  }
  return {pass, detail};
}

// ------------------------------------------------------------------ 8
// Exponential-moment identity from stationary modulated-Gibbs samples
// against two independent partition estimates.
Outcome exponential_moment() {
  Grid1D grid{-3.0, 3.0, 256};
  auto spec = KernelSpec::log_kernel();
  auto V = ConfinementSpec::quadratic(2.0);
  const double beta = 1.0;
  const int N = 4;
  auto eq = solve_thermal_equilibrium(spec, V, beta, grid);

  CounterRng rng = CounterRng::stream(20260826, 8);
  MalaSampler mala(MalaTarget::Modulated, spec, V, &eq.mu_beta, beta, 0.005);
  auto samples = mala.run(sample_iid(eq.mu_beta, N, rng), 505000, 5, rng);
  samples.erase(samples.begin(), samples.begin() + 1000);  // burn-in; 1e5 kept

  auto chk = exponential_moment_check(eq.mu_beta, spec, beta, N, samples, 50000, rng);
  double err = std::hypot(chk.lhs_error, chk.rhs_error);
  double gap = std::abs(chk.lhs - chk.rhs);
  return {gap <= 3.0 * err,
          fmt("|lhs-rhs| %.4f vs 3x MC error %.4f (acceptance %.2f)", gap, 3.0 * err,
              mala.acceptance_rate())};
}

// ------------------------------------------------------------------ 9
// Chaos trend: the final-time gap between the interacting ensemble's
// one-particle marginal and the mean-field profile shrinks with N.
Outcome chaos_trend() {
  Grid1D grid{-3.0, 3.0, 256};
  auto spec = KernelSpec::log_kernel();
  auto V = ConfinementSpec::quadratic(2.0);
  const double beta = 1.0, dt = 0.001, t_end = 1.0;
  auto eq = solve_thermal_equilibrium(spec, V, beta, grid);

  MeanFieldSolver solver(spec, V, beta, grid);
  auto mf = solver.make_state(eq.mu_beta);
  for (long i = 0, n = std::lround(t_end / dt); i < n; ++i) mf = solver.step(mf, dt);

  std::vector<double> w2;
  std::string detail = "W2 at t=1:";
  for (int N : {64, 128, 256}) {
    EnsembleParams p;
    p.N = N;
    p.M = 64;
    p.dt = dt;
    p.t_end = t_end;
    p.snapshot_dt = t_end;
    p.master_seed = 20260826;
    p.beta = beta;
    auto init = [&](CounterRng& r) { return sample_iid(eq.mu_beta, N, r); };
    auto snaps = run_ensemble(init, spec, V, &eq.mu_beta, p);
    auto d = marginal_distances(snaps.back().replicas, mf.mu, 1);
    w2.push_back(d.w2);
    detail += fmt(" N=%.0f %.4f", double(N), d.w2);
  }
  bool pass = w2[0] > w2[1] && w2[1] > w2[2];
  return {pass, detail};
}

// ------------------------------------------------------------------ 10
// At equilibrium the modulated Gibbs measure is the Gibbs measure: exact on
// the tensor grid at N=2, statistically via MALA marginals at N=8.
Outcome gibbs_equality() {
  auto spec = KernelSpec::log_kernel();
  auto V = ConfinementSpec::quadratic(2.0);
  const double beta = 1.0;

  Grid1D grid{-3.0, 3.0, 128};
  auto eq = solve_thermal_equilibrium(spec, V, beta, grid);
  auto p = build_gibbs(spec, V, beta, grid, 2);
  auto q = build_modulated_gibbs(eq.mu_beta, spec, beta, 2);
  double sup_rel = 0.0, floor = 1e-12 * q.values[0];
  for (double v : q.values) floor = std::max(floor, 1e-12 * v);
  for (size_t i = 0; i < q.values.size(); ++i)
    if (q.values[i] > floor)
      sup_rel = std::max(sup_rel, std::abs(p.values[i] - q.values[i]) / q.values[i]);

  Grid1D fine{-3.0, 3.0, 256};
  auto eqf = solve_thermal_equilibrium(spec, V, beta, fine);
  CounterRng rng = CounterRng::stream(20260826, 10);
  MalaSampler mala(MalaTarget::Gibbs, spec, V, nullptr, beta, 0.001);
  auto samples = mala.run(sample_iid(eqf.mu_beta, 8, rng), 120000, 10, rng);
  samples.erase(samples.begin(), samples.begin() + 2000);
  auto d = marginal_distances(samples, eqf.mu_beta, 1);

  bool pass = sup_rel < 1e-6 && d.tv < 0.05;
  return {pass, fmt("sup relative gap %.2e (tol 1e-6), N=8 marginal TV %.3f (tol 0.05)",
                    sup_rel, d.tv)};
}

}  // namespace

int main() {
  setvbuf(stdout, nullptr, _IONBF, 0);
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"rewriting-identity", rewriting_identity},
      {"thermal-equilibrium", thermal_equilibrium},
      {"meanfield-dissipation", meanfield_dissipation},
      {"dissipation-inequality", dissipation_inequality},
      {"lsi-chain-decay-rate", lsi_chain},
      {"generation-of-chaos", generation_of_chaos},
      {"partition-bounds", partition_bounds},
      {"exponential-moment", exponential_moment},
      {"chaos-trend", chaos_trend},
      {"gibbs-equality", gibbs_equality},
  };
  int failures = 0, idx = 0;
  for (const auto& c : criteria) {
    ++idx;
    Outcome out;
    auto t0 = std::chrono::steady_clock::now();
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %02d %-24s %s  [%6.1fs]  %s\n", idx, c.name,
                out.pass ? "PASS" : "FAIL", sec, out.detail.c_str());
    if (!out.pass) ++failures;
  }
  if (failures) std::printf("%d of 10 criteria failed\n", failures);
  else std::printf("all 10 criteria passed\n");
  return failures ? 1 : 0;
}
