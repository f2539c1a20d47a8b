#include "chaoslab/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "chaoslab/equilibrium.hpp"
#include "chaoslab/liouville.hpp"
#include "chaoslab/meanfield.hpp"
#include "chaoslab/particles.hpp"

namespace chaoslab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class AuditViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void write_manifest(const fs::path& dir, const std::string& recipe, const ExperimentConfig& cfg,
                    double wall_s, json extra = json::object()) {
  json m;
  m["schema_version"] = 1;
  m["recipe"] = recipe;
  m["seed"] = cfg.ensemble.master_seed;
  m["threads"] = resolve_threads(cfg);
  m["wall_time_s"] = wall_s;
  m["config"] = print_config(cfg);
  for (auto& [k, v] : extra.items()) m[k] = v;
  open_out(dir / "manifest.json") << m.dump(2) << "\n";
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

EquilibriumResult solve_equilibrium(const ExperimentConfig& cfg) {
  EquilibriumOptions opt;
  opt.tol = cfg.tolerances.equilibrium;
  return solve_thermal_equilibrium(cfg.kernel, cfg.confinement, cfg.beta, cfg.grid, opt);
}

// exp(x * eps) tilt of a density, normalized
GridDensity tilt_density(const GridDensity& mu, double eps) {
  std::vector<double> v(size_t(mu.n()));
  for (int k = 0; k < mu.n(); ++k) v[size_t(k)] = mu[k] * std::exp(eps * mu.grid.center(k));
  return GridDensity::from_values(mu.grid, std::move(v));
}

// ------------------------------------------------------------ equilibrium

int recipe_equilibrium(const ExperimentConfig& cfg, const fs::path& dir) {
  Timer timer;
  auto eq = solve_equilibrium(cfg);
  write_density_csv(eq.mu_beta, (dir / "mu_beta.csv").string());
  auto lsi = convexity_constant(eq.mu_beta, eq.mu_beta, cfg.confinement, cfg.kernel, cfg.beta);
  json s;
  s["c_beta"] = eq.c_beta;
  s["residual"] = eq.residual;
  s["iterations"] = eq.iterations;
  s["kappa"] = lsi.kappa;
  s["c_ls"] = lsi.valid ? lsi.c_ls : 0.0;
  s["lsi_valid"] = lsi.valid;
  open_out(dir / "summary.json") << s.dump(2) << "\n";
  write_manifest(dir, "equilibrium", cfg, timer.seconds());
  return kExitOk;
}

// -------------------------------------------------------------- meanfield

int recipe_meanfield(const ExperimentConfig& cfg, const fs::path& dir) {
  Timer timer;
  auto eq = solve_equilibrium(cfg);
  MeanFieldSolver solver(cfg.kernel, cfg.confinement, cfg.beta, cfg.grid);

  // start from the interaction-free Gibbs shape exp(-beta V)
  GridDensity mu0 = GridDensity::from_function(cfg.grid, [&](double x) {
    return std::exp(-cfg.beta * confinement_eval1(cfg.confinement, x));
  });
  MeanFieldState state = solver.make_state(std::move(mu0));

  auto series = open_out(dir / "meanfield.csv");
  series << "t,free_energy,dissipation_lhs,dissipation_rhs,sup_mu,sup_u,sup_grad_u,"
            "l1_dist_to_equilibrium\n";

  const double dt = cfg.dynamics.dt;
  const int per_snap = std::max(1, int(std::llround(cfg.dynamics.snapshot_dt / dt)));
  const long steps = std::llround(cfg.dynamics.t_end / dt);
  int snap = 0;
  double lhs = 0.0, rhs = 0.0;
  for (long step = 0; step <= steps; ++step) {
    if (step % per_snap == 0 || step == steps) {
      series << num(state.t) << ',' << num(solver.free_energy_of(state.mu)) << ',' << num(lhs)
             << ',' << num(rhs) << ',' << num(state.sup_norm) << ',' << num(state.sup_u) << ','
             << num(state.grad_u_sup) << ',' << num(l1_distance(state.mu, eq.mu_beta)) << '\n';
      char name[32];
      std::snprintf(name, sizeof name, "mu_%04d.csv", snap++);
      write_density_csv(state.mu, (dir / name).string());
    }
    if (step == steps) break;
    MeanFieldState next = solver.step(state, dt);
    std::tie(lhs, rhs) = mf_dissipation(solver, state, next);
    state = std::move(next);
  }
  write_manifest(dir, "meanfield", cfg, timer.seconds(), {{"snapshots", snap}});
  return kExitOk;
}

// -------------------------------------------------------------- particles

int recipe_particles(const ExperimentConfig& cfg, const fs::path& dir) {
  Timer timer;
  auto eq = solve_equilibrium(cfg);
  write_density_csv(eq.mu_beta, (dir / "mu_beta.csv").string());

  EnsembleParams params;
  params.N = cfg.ensemble.N;
  params.M = cfg.ensemble.M;
  params.dt = cfg.dynamics.dt;
  params.t_end = cfg.dynamics.t_end;
  params.snapshot_dt = cfg.dynamics.snapshot_dt;
  params.master_seed = cfg.ensemble.master_seed;
  params.beta = cfg.beta;
  params.threads = resolve_threads(cfg);
  if (cfg.dynamics.kind == "sde") {
    params.dynamics = DynamicsKind::Sde;
  } else {
    params.dynamics = DynamicsKind::Mala;
    params.mala_target =
        cfg.dynamics.kind == "mala_gibbs" ? MalaTarget::Gibbs : MalaTarget::Modulated;
  }

  const GridDensity& mu = eq.mu_beta;
  auto init = [&](CounterRng& rng) { return sample_iid(mu, params.N, rng); };
  auto snaps = run_ensemble(init, cfg.kernel, cfg.confinement, &mu, params);

  auto index = open_out(dir / "snapshots.csv");
  index << "snapshot,t,file\n";
  for (size_t s = 0; s < snaps.size(); ++s) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%04zu.csv", s);
    index << s << ',' << num(snaps[s].t) << ',' << name << '\n';
    auto out = open_out(dir / name);
    out << "replica,particle,x\n";
    for (size_t r = 0; r < snaps[s].replicas.size(); ++r)
      for (int i = 0; i < snaps[s].replicas[r].N; ++i)
        out << r << ',' << i << ',' << num(snaps[s].replicas[r].at(i, 0)) << '\n';
  }
  write_manifest(dir, "particles", cfg, timer.seconds(), {{"snapshots", snaps.size()}});
  return kExitOk;
}

// -------------------------------------------------------------- liouville

struct LiouvilleArtifacts {
  std::vector<FreeEnergyRecord> records;
  AuditReport dissipation, lsi, gronwall;
  GronwallReport gronwall_full;
  double kappa_min = 0.0, c_ls = 0.0, log_k = 0.0;
};

// Joint run: f^0 is the tilted non-product mixture, the mean-field reference
// stays at mu_beta (kappa certificate holds along the whole trajectory).
LiouvilleArtifacts liouville_run(const ExperimentConfig& cfg, double tilt) {
  const int N = cfg.ensemble.N;
  if (N != 2 && N != 3) throw ConfigError({"ensemble.N: liouville recipe needs N in {2,3}"});
  JointDensity::check_budget(cfg.grid.n, N);

  auto eq = solve_equilibrium(cfg);
  const GridDensity& mu = eq.mu_beta;
  MeanFieldSolver solver(cfg.kernel, cfg.confinement, cfg.beta, cfg.grid);
  MeanFieldState mf = solver.make_state(mu);

  JointDensity f = N == 2 ? build_mixture(tilt_density(mu, tilt), tilt_density(mu, -tilt))
                          : build_product(mu, N);

  LiouvilleArtifacts art;
  art.log_k = log_partition_tensor(mu, cfg.kernel, cfg.beta, N);
  auto lsi0 = convexity_constant(mu, mu, cfg.confinement, cfg.kernel, cfg.beta);
  art.kappa_min = lsi0.kappa;

  TheoryConstants constants = cfg.constants;
  constants.validate(cfg.beta);
  const double o_n = error_terms(N, mu, cfg.kernel, constants).o_n;

  const double dt = cfg.dynamics.dt;
  const int per_snap = std::max(1, int(std::llround(cfg.dynamics.snapshot_dt / dt)));
  const long steps = std::llround(cfg.dynamics.t_end / dt);

  GronwallInputs gin;
  for (long step = 0; step <= steps; ++step) {
    if (step % per_snap == 0 || step == steps) {
      FreeEnergyRecord rec = modulated_free_energy(f, mf.mu, cfg.kernel, cfg.beta);
      rec.t = step * dt;
      rec.e_script = rec.e_n + o_n;
      rec.fisher = modulated_fisher(f, mf.mu, cfg.kernel, cfg.beta);
      rec.commutator = joint_commutator(f, mf.u, mf.mu, cfg.kernel);
      art.records.push_back(rec);
      gin.o_n.push_back(o_n);
      gin.odot_n.push_back(0.0);  // reference flow is stationary here
      gin.u_star.push_back(constants.c_me * mf.grad_u_sup);
      gin.log_k.push_back(art.log_k);
      auto lsi = convexity_constant(mf.mu, mu, cfg.confinement, cfg.kernel, cfg.beta);
      art.kappa_min = std::min(art.kappa_min, lsi.kappa);
    }
    if (step == steps) break;
    f = liouville_step(f, cfg.kernel, cfg.confinement, cfg.beta, dt);
    mf = solver.step(mf, dt);
  }

  const double h = cfg.grid.h();
  const double tol_disc = cfg.tolerances.disc_c * (h * h + dt);
  art.dissipation = dissipation_audit(art.records, cfg.beta, tol_disc);
  if (!(art.kappa_min > 0.0))
    throw AuditViolation("liouville: kappa <= 0, no LSI certificate along the trajectory");
  art.c_ls = 2.0 / (cfg.beta * art.kappa_min);
  art.lsi = lsi_chain_audit(art.records, gin.log_k, cfg.beta, N, art.c_ls,
                            cfg.tolerances.audit + tol_disc);
  art.gronwall_full =
      gronwall_audit(art.records, art.c_ls, cfg.beta, N, gin, cfg.tolerances.audit + tol_disc);
  art.gronwall = art.gronwall_full.bound;
  return art;
}

void write_records_csv(const std::vector<FreeEnergyRecord>& records, const fs::path& p) {
  auto out = open_out(p);
  out << "t,h_rel,mean_F,e_n,e_script,fisher,commutator,bound_rhs\n";
  for (const auto& r : records)
    out << num(r.t) << ',' << num(r.h_rel) << ',' << num(r.mean_F) << ',' << num(r.e_n) << ','
        << num(r.e_script) << ',' << num(r.fisher) << ',' << num(r.commutator) << ','
        << num(r.bound_rhs) << '\n';
}

json audit_json(const AuditReport& rep) {
  return {{"violations", rep.violations}, {"worst_margin", rep.worst_margin}};
}

int recipe_liouville(const ExperimentConfig& cfg, const fs::path& dir) {
  Timer timer;
  auto art = liouville_run(cfg, 2.0);
  write_records_csv(art.records, dir / "records.csv");
  json a;
  a["dissipation"] = audit_json(art.dissipation);
  a["lsi_chain"] = audit_json(art.lsi);
  a["decay_bound"] = audit_json(art.gronwall);
  a["kappa_min"] = art.kappa_min;
  a["c_ls"] = art.c_ls;
  a["log_k"] = art.log_k;
  a["fitted_rate"] = art.gronwall_full.fitted_rate;
  a["modulated_rate"] = art.gronwall_full.modulated_rate;
  a["plain_rate"] = art.gronwall_full.plain_rate;
  open_out(dir / "audit.json") << a.dump(2) << "\n";
  write_manifest(dir, "liouville", cfg, timer.seconds());
  int bad = art.dissipation.violations + art.lsi.violations + art.gronwall.violations;
  return bad ? kExitAudit : kExitOk;
}

// --------------------------------------------------------------- diagnose

int recipe_diagnose(const ExperimentConfig& cfg, const fs::path& dir) {
  Timer timer;
  if (!fs::exists(dir / "snapshots.csv") || !fs::exists(dir / "mu_beta.csv"))
    throw ConfigError({"output_dir: diagnose needs snapshots.csv and mu_beta.csv from a "
                       "previous particles run"});
  GridDensity mu = read_density_csv((dir / "mu_beta.csv").string());

  std::ifstream index(dir / "snapshots.csv");
  std::string line;
  std::getline(index, line);  // header
  auto out = open_out(dir / "diagnostics.csv");
  out << "t,mean_F,min_F,max_F,riesz_floor,w2,tv,kl\n";
  TheoryConstants constants = cfg.constants;

  while (std::getline(index, line)) {
    size_t c1 = line.find(','), c2 = line.rfind(',');
    if (c1 == std::string::npos || c2 <= c1) continue;
    double t = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    std::string file = line.substr(c2 + 1);
    std::ifstream snap(dir / file);
    if (!snap) throw std::runtime_error("diagnose: missing snapshot " + file);
    std::string row;
    std::getline(snap, row);  // header
    std::vector<ParticleConfig> replicas;
    while (std::getline(snap, row)) {
      size_t a = row.find(','), b = row.rfind(',');
      size_t r = size_t(std::stol(row.substr(0, a)));
      double x = std::stod(row.substr(b + 1));
      if (replicas.size() <= r) replicas.resize(r + 1, ParticleConfig{0, 1, {}});
      replicas[r].x.push_back(x);
      replicas[r].N = int(replicas[r].x.size());
    }
    double mean_f = 0.0, min_f = kInf, max_f = -kInf;
    for (const auto& rep : replicas) {
      double fn = modulated_energy(rep, mu, cfg.kernel).total;
      mean_f += fn;
      min_f = std::min(min_f, fn);
      max_f = std::max(max_f, fn);
    }
    mean_f /= double(replicas.size());
    double floor = replicas.empty()
                       ? 0.0
                       : riesz_lower_bound(replicas[0].N, mu.sup_norm(), cfg.kernel, constants);
    double w2 = std::nan(""), tv = std::nan(""), kl = std::nan("");
    long samples = 0;
    for (const auto& rep : replicas) samples += rep.N;
    if (samples >= 2000) {  // ~30 per bin at 64 histogram bins
      auto md = marginal_distances(replicas, mu, 1);
      w2 = md.w2;
      tv = md.tv;
      kl = md.kl;
    }
    out << num(t) << ',' << num(mean_f) << ',' << num(min_f) << ',' << num(max_f) << ','
        << num(floor) << ',' << num(w2) << ',' << num(tv) << ',' << num(kl) << '\n';
  }
  write_manifest(dir, "diagnose", cfg, timer.seconds());
  return kExitOk;
}

// ----------------------------------------------------------- chaos-report

int recipe_chaos_report(const ExperimentConfig& cfg, const fs::path& dir) {
  Timer timer;
  json checks = json::object();
  auto record = [&](const std::string& name, double value, bool pass) {
    checks[name] = {{"value", value}, {"status", pass ? "pass" : "fail"}};
  };

  auto eq = solve_equilibrium(cfg);
  record("equilibrium_residual", eq.residual, eq.residual < 1e-8);

  // Gibbs == modulated Gibbs at mu_beta (sup-relative)
  const int N = cfg.ensemble.N == 3 ? 3 : 2;
  JointDensity gibbs = build_gibbs(cfg.kernel, cfg.confinement, cfg.beta, cfg.grid, N);
  JointDensity modg = build_modulated_gibbs(eq.mu_beta, cfg.kernel, cfg.beta, N);
  double rel = 0.0;
  for (long i = 0; i < gibbs.size(); ++i) {
    double g = gibbs.values[size_t(i)], q = modg.values[size_t(i)];
    if (g > 1e-12) rel = std::max(rel, std::abs(q - g) / g);
  }
  record("gibbs_equals_modulated_gibbs", rel, rel < 1e-6);

  // rewriting identity on the non-product mixture
  JointDensity f0 = build_mixture(tilt_density(eq.mu_beta, 2.0), tilt_density(eq.mu_beta, -2.0));
  auto rec0 = modulated_free_energy(f0, eq.mu_beta, cfg.kernel, cfg.beta);
  double log_k = log_partition_tensor(eq.mu_beta, cfg.kernel, cfg.beta, 2);
  double rewritten =
      (relative_entropy(f0, build_modulated_gibbs(eq.mu_beta, cfg.kernel, cfg.beta, 2)) -
       log_k / 2.0) /
      cfg.beta;
  double rw_err = std::abs(rec0.e_n - rewritten);
  record("rewriting_identity_error", rw_err, rw_err < 1e-6 * (1.0 + std::abs(rec0.e_n)));

  // Jensen floor for the partition function
  KernelTable table = KernelTable::build(cfg.kernel, cfg.grid);
  double jensen = 0.5 * cfg.beta * double_integral(table, eq.mu_beta, eq.mu_beta);
  record("jensen_floor_margin", log_k - jensen, log_k >= jensen - 1e-10);

  // joint run with all three audits
  ExperimentConfig joint_cfg = cfg;
  joint_cfg.ensemble.N = N;
  auto art = liouville_run(joint_cfg, 2.0);
  write_records_csv(art.records, dir / "records.csv");
  record("dissipation_worst_margin", art.dissipation.worst_margin,
         art.dissipation.violations == 0);
  record("lsi_chain_worst_margin", art.lsi.worst_margin, art.lsi.violations == 0);
  record("decay_bound_worst_margin", art.gronwall.worst_margin, art.gronwall.violations == 0);
  record("entropy_decay_rate", art.gronwall_full.fitted_rate,
         art.gronwall_full.fitted_rate >= 0.9 * art.gronwall_full.plain_rate);

  bool all_pass = true;
  for (auto& [k, v] : checks.items()) all_pass = all_pass && v["status"] == "pass";
  json s;
  s["checks"] = checks;
  s["overall"] = all_pass ? "pass" : "fail";
  s["kappa_min"] = art.kappa_min;
  s["c_ls"] = art.c_ls;
  open_out(dir / "summary.json") << s.dump(2) << "\n";
  write_manifest(dir, "chaos-report", cfg, timer.seconds());
  return all_pass ? kExitOk : kExitAudit;
}

}  // namespace

int resolve_threads(const ExperimentConfig& config) {
  if (config.threads > 0) return config.threads;
  if (const char* env = std::getenv("CHAOSLAB_THREADS")) {
    int t = std::atoi(env);
    if (t > 0) return t;
  }
  int hw = int(std::thread::hardware_concurrency());
  return hw > 0 ? hw : 1;
}

int run_recipe(const std::string& name, const ExperimentConfig& config) {
  try {
    fs::path dir(config.output_dir);
    fs::create_directories(dir);
    if (name == "equilibrium") return recipe_equilibrium(config, dir);
    if (name == "meanfield") return recipe_meanfield(config, dir);
    if (name == "particles") return recipe_particles(config, dir);
    if (name == "liouville") return recipe_liouville(config, dir);
    if (name == "diagnose") return recipe_diagnose(config, dir);
    if (name == "chaos-report") return recipe_chaos_report(config, dir);
    std::fprintf(stderr, "unknown recipe: %s\n", name.c_str());
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitConfig;
  } catch (const AuditViolation& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitAudit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitNumerical;
  }
}

}  // namespace chaoslab
