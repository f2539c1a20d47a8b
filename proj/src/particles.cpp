#include "chaoslab/particles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace chaoslab {

bool ParticleConfig::pairwise_distinct() const {
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      bool same = true;
      for (int k = 0; k < d; ++k)
        if (at(i, k) != at(j, k)) {
          same = false;
          break;
        }
      if (same) return false;
    }
  return true;
}

bool ParticleConfig::ordered_1d() const {
  for (int i = 0; i + 1 < N; ++i)
    if (at(i, 0) > at(i + 1, 0)) return false;
  return true;
}

double particle_energy(const ParticleConfig& cfg, const KernelSpec& spec,
                       const ConfinementSpec& V) {
  double pair = 0.0, conf = 0.0;
  for (int i = 0; i < cfg.N; ++i) {
    Vec3 xi{cfg.at(i, 0), cfg.d > 1 ? cfg.at(i, 1) : 0.0, cfg.d > 2 ? cfg.at(i, 2) : 0.0};
    conf += confinement_eval(V, xi);
    for (int j = i + 1; j < cfg.N; ++j) {
      Vec3 xj{cfg.at(j, 0), cfg.d > 1 ? cfg.at(j, 1) : 0.0, cfg.d > 2 ? cfg.at(j, 2) : 0.0};
      pair += kernel_eval(spec, xi, xj);
    }
  }
  return pair / cfg.N + conf;
}

namespace {

void drift(const ParticleConfig& cfg, const KernelSpec& spec, const ConfinementSpec& V,
           std::vector<double>& out) {
  const int N = cfg.N, d = cfg.d;
  out.assign(size_t(N * d), 0.0);
  for (int i = 0; i < N; ++i) {
    Vec3 xi{cfg.at(i, 0), d > 1 ? cfg.at(i, 1) : 0.0, d > 2 ? cfg.at(i, 2) : 0.0};
    Vec3 gv = confinement_grad(V, xi);
    for (int k = 0; k < d; ++k) out[size_t(i * d + k)] -= gv[k];
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      Vec3 xj{cfg.at(j, 0), d > 1 ? cfg.at(j, 1) : 0.0, d > 2 ? cfg.at(j, 2) : 0.0};
      Vec3 gk = kernel_grad(spec, xi, xj);
      for (int k = 0; k < d; ++k) out[size_t(i * d + k)] -= gk[k] / double(N);
    }
  }
}

ParticleConfig em_substep(const ParticleConfig& cfg, const KernelSpec& spec,
                          const ConfinementSpec& V, double beta, double dt, CounterRng& rng,
                          const SdeOptions& opt, int depth) {
  std::vector<double> b;
  drift(cfg, spec, V, b);
  const double noise = (opt.zero_noise || std::isinf(beta)) ? 0.0 : std::sqrt(2.0 * dt / beta);
  // Truncated Euler-Maruyama: clamp the drift displacement of one substep at
  // 4 sqrt(dt) so a near-collision of a singular kernel cannot eject a
  // particle.  Inactive for drifts of ordinary size.
  const double cap = 4.0 * std::sqrt(dt);
  ParticleConfig next = cfg;
  for (size_t k = 0; k < next.x.size(); ++k) {
    double disp = std::clamp(dt * b[k], -cap, cap);
    next.x[k] = cfg.x[k] + disp + (noise > 0.0 ? noise * rng.normal() : 0.0);
  }

  if (cfg.d == 1 && spec.singular() && !next.ordered_1d()) {
    if (depth < opt.max_halvings) {
      // cover the same dt by two recursive half steps
      ParticleConfig half = em_substep(cfg, spec, V, beta, 0.5 * dt, rng, opt, depth + 1);
      return em_substep(half, spec, V, beta, 0.5 * dt, rng, opt, depth + 1);
    }
    // dt floor reached: reflect back into the ordered chamber.  Particles are
    // exchangeable, so sorting the coordinates is the chamber reflection and
    // leaves the law of the empirical measure unchanged.
    std::sort(next.x.begin(), next.x.end());
    if (!next.ordered_1d())
      throw std::runtime_error("sde_step: coincident particles after chamber reflection");
  }
  return next;
}

}  // namespace

ParticleConfig sde_step(const ParticleConfig& cfg, const KernelSpec& spec,
                        const ConfinementSpec& V, double beta, double dt, CounterRng& rng,
                        const SdeOptions& opt) {
  if (!(dt > 0.0)) throw std::invalid_argument("sde_step: dt must be > 0");
  if (spec.singular() && !cfg.pairwise_distinct())
    throw std::invalid_argument("sde_step: coincident particles with a singular kernel");
  if (cfg.d == 1 && spec.singular() && !cfg.ordered_1d())
    throw std::invalid_argument("sde_step: initial configuration must lie in the Weyl chamber");
  return em_substep(cfg, spec, V, beta, dt, rng, opt, 0);
}

double sample_density(const GridDensity& mu, CounterRng& rng) {
  const double target = rng.uniform();
  const double h = mu.grid.h();
  double acc = 0.0;
  for (int k = 0; k < mu.n(); ++k) {
    double cell = mu[k] * h;
    if (acc + cell >= target && cell > 0.0) {
      double frac = (target - acc) / cell;
      return mu.grid.left(k) + frac * h;
    }
    acc += cell;
  }
  return mu.grid.hi;  // target ~ 1 with accumulated roundoff
}

ParticleConfig sample_iid(const GridDensity& mu, int N, CounterRng& rng) {
  ParticleConfig cfg;
  cfg.N = N;
  cfg.d = 1;
  cfg.x.resize(size_t(N));
  for (int i = 0; i < N; ++i) cfg.x[size_t(i)] = sample_density(mu, rng);
  std::sort(cfg.x.begin(), cfg.x.end());
  return cfg;
}

// ---------------------------------------------------------------- MALA

namespace {

// piecewise-linear interpolation of log mu between cell centers;
// returns false when x leaves the grid window
bool log_mu_interp(const GridDensity& mu, double x, double* val, double* slope) {
  const auto& g = mu.grid;
  if (x < g.lo || x > g.hi) return false;
  const double h = g.h();
  double t = (x - g.center(0)) / h;
  int i = int(std::floor(t));
  i = std::max(0, std::min(g.n - 2, i));
  double u = (x - g.center(i)) / h;
  double l0 = std::log(std::max(mu[i], 1e-300));
  double l1 = std::log(std::max(mu[i + 1], 1e-300));
  if (val) *val = l0 + u * (l1 - l0);
  if (slope) *slope = (l1 - l0) / h;
  return true;
}

}  // namespace

MalaSampler::MalaSampler(MalaTarget target, const KernelSpec& spec, const ConfinementSpec& V,
                         const GridDensity* mu, double beta, double dt, MalaOptions opt)
    : target_(target), spec_(spec), V_(V), mu_(mu), beta_(beta), dt_(dt), opt_(opt) {
  if (target == MalaTarget::Modulated && !mu)
    throw std::invalid_argument("mala: modulated target requires a reference density");
  if (!(beta > 0.0)) throw std::invalid_argument("mala: beta must be > 0");
}

double MalaSampler::log_target(const ParticleConfig& cfg) const {
  const int N = cfg.N;
  if (target_ == MalaTarget::Gibbs) return -beta_ * particle_energy(cfg, spec_, V_);
  // -beta N F_N + sum log mu, dropping the configuration-independent
  // background term of F_N
  double pair = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double v = kernel_value_r(spec_, cfg.at(i, 0) - cfg.at(j, 0));
      if (std::isinf(v)) return -kInf;
      pair += v;
    }
  double cross = 0.0, logmu = 0.0;
  for (int i = 0; i < N; ++i) {
    double lv;
    if (!log_mu_interp(*mu_, cfg.at(i, 0), &lv, nullptr)) return -kInf;
    logmu += lv;
    cross += convolve_at(spec_, *mu_, cfg.at(i, 0));
  }
  double f_n = pair / double(N * N) - cross / double(N);
  return -beta_ * double(N) * f_n + logmu;
}

void MalaSampler::grad_log_target(const ParticleConfig& cfg, std::vector<double>& out) const {
  const int N = cfg.N;
  out.assign(size_t(N), 0.0);
  if (target_ == MalaTarget::Gibbs) {
    for (int i = 0; i < N; ++i) {
      double acc = -confinement_grad1(V_, cfg.at(i, 0));
      for (int j = 0; j < N; ++j)
        if (j != i) acc -= kernel_grad1(spec_, cfg.at(i, 0), cfg.at(j, 0)) / double(N);
      out[size_t(i)] = beta_ * acc;
    }
    return;
  }
  for (int i = 0; i < N; ++i) {
    double acc = 0.0;
    for (int j = 0; j < N; ++j)
      if (j != i) acc -= kernel_grad1(spec_, cfg.at(i, 0), cfg.at(j, 0)) / double(N);
    acc += convolve_deriv_at(spec_, *mu_, cfg.at(i, 0));
    double slope = 0.0;
    log_mu_interp(*mu_, cfg.at(i, 0), nullptr, &slope);
    out[size_t(i)] = beta_ * acc + slope;
  }
}

bool MalaSampler::step(ParticleConfig& cfg, CounterRng& rng) {
  const int N = cfg.N;
  std::vector<double> gx, gy;
  grad_log_target(cfg, gx);
  ParticleConfig prop = cfg;
  const double sd = std::sqrt(2.0 * dt_);
  for (int i = 0; i < N; ++i) prop.x[size_t(i)] = cfg.at(i, 0) + dt_ * gx[size_t(i)] + sd * rng.normal();

  ++attempts_;
  double lp_prop = log_target(prop);
  bool accept = false;
  if (std::isfinite(lp_prop)) {
    if (!opt_.metropolis) {
      accept = true;
    } else {
      grad_log_target(prop, gy);
      double lp_cur = log_target(cfg);
      double fwd = 0.0, bwd = 0.0;  // -|y - x - dt grad|^2 / (4 dt)
      for (int i = 0; i < N; ++i) {
        double f = prop.at(i, 0) - cfg.at(i, 0) - dt_ * gx[size_t(i)];
        double b = cfg.at(i, 0) - prop.at(i, 0) - dt_ * gy[size_t(i)];
        fwd += f * f;
        bwd += b * b;
      }
      double log_alpha = lp_prop - lp_cur + (fwd - bwd) / (4.0 * dt_);
      accept = std::log(rng.uniform()) < log_alpha;
    }
  }
  if (accept) {
    cfg = std::move(prop);
    ++accepts_;
  }
  return accept;
}

std::vector<ParticleConfig> MalaSampler::run(ParticleConfig cfg, int n_steps, int thin,
                                             CounterRng& rng) {
  std::vector<ParticleConfig> out;
  out.reserve(size_t(n_steps / std::max(1, thin) + 1));
  long window_accepts = 0;
  for (int s = 1; s <= n_steps; ++s) {
    window_accepts += step(cfg, rng) ? 1 : 0;
    if (thin > 0 && s % thin == 0) out.push_back(cfg);
    if (s % opt_.acceptance_window == 0) {
      if (double(window_accepts) < opt_.min_acceptance * opt_.acceptance_window)
        throw std::runtime_error(
            "mala: acceptance rate below 1% over the last window; reduce dt");
      window_accepts = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------- ensembles

std::vector<EnsembleSnapshot> run_ensemble(
    const std::function<ParticleConfig(CounterRng&)>& init, const KernelSpec& spec,
    const ConfinementSpec& V, const GridDensity* mu, const EnsembleParams& params) {
  if (params.M < 1) throw std::invalid_argument("ensemble: M must be >= 1");
  const int n_snaps = int(std::round(params.t_end / params.snapshot_dt)) + 1;
  const int steps_per_snap = std::max(1, int(std::round(params.snapshot_dt / params.dt)));

  std::vector<EnsembleSnapshot> snaps{size_t(n_snaps), EnsembleSnapshot{}};
  for (int s = 0; s < n_snaps; ++s) {
    snaps[size_t(s)].t = s * params.snapshot_dt;
    snaps[size_t(s)].replicas.resize(size_t(params.M));
  }

  std::exception_ptr first_error;
  std::vector<std::string> replica_errors(size_t(params.M));

  auto run_replica = [&](int r) {
    CounterRng rng = CounterRng::stream(params.master_seed, uint64_t(r));
    ParticleConfig cfg = init(rng);
    snaps[0].replicas[size_t(r)] = cfg;
    if (params.dynamics == DynamicsKind::Sde) {
      for (int s = 1; s < n_snaps; ++s) {
        for (int q = 0; q < steps_per_snap; ++q)
          cfg = sde_step(cfg, spec, V, params.beta, params.dt, rng);
        snaps[size_t(s)].replicas[size_t(r)] = cfg;
      }
    } else {
      MalaSampler sampler(params.mala_target, spec, V, mu, params.beta, params.dt);
      for (int s = 1; s < n_snaps; ++s) {
        for (int q = 0; q < steps_per_snap; ++q) sampler.step(cfg, rng);
        snaps[size_t(s)].replicas[size_t(r)] = cfg;
      }
    }
  };

  int n_threads = params.threads > 0 ? params.threads
                                     : int(std::max(1u, std::thread::hardware_concurrency()));
  n_threads = std::min(n_threads, params.M);
  std::vector<std::thread> pool;
  std::atomic<int> next_replica{0};
  std::mutex err_mutex;
  for (int w = 0; w < n_threads; ++w)
    pool.emplace_back([&] {
      for (;;) {
        int r = next_replica.fetch_add(1);
        if (r >= params.M) return;
        try {
          run_replica(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) {
            first_error = std::current_exception();
            replica_errors[size_t(r)] = "replica " + std::to_string(r) + " failed";
          }
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return snaps;
}

}  // namespace chaoslab
