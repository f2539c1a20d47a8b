#include "chaoslab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace chaoslab {

ModulatedEnergyBreakdown modulated_energy(const ParticleConfig& cfg, const GridDensity& mu,
                                          const KernelSpec& spec) {
  if (cfg.d != 1) throw std::invalid_argument("modulated_energy: grid mu requires d=1");
  const int N = cfg.N;
  ModulatedEnergyBreakdown b;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double v = kernel_value_r(spec, cfg.at(i, 0) - cfg.at(j, 0));
      if (std::isinf(v) && spec.singular())
        throw std::invalid_argument("modulated_energy: coincident points with a singular kernel");
      b.pair_sum += v;
    }
  b.pair_sum /= double(N) * double(N);  // (1/2N^2) * 2 * sum_{i<j}
  for (int i = 0; i < N; ++i) b.cross += convolve_at(spec, mu, cfg.at(i, 0));
  b.cross /= double(N);
  b.background = 0.5 * double_integral(spec, mu, mu);
  b.total = b.pair_sum - b.cross + b.background;
  return b;
}

double unrenormalized_energy(const ParticleConfig& cfg, const GridDensity& mu,
                             const KernelSpec& spec) {
  if (spec.singular())
    throw std::invalid_argument("unrenormalized_energy: kernel must be continuous at the diagonal");
  auto b = modulated_energy(cfg, mu, spec);
  double diag = 0.0;
  for (int i = 0; i < cfg.N; ++i) diag += kernel_value_r(spec, 0.0);
  return b.total + diag / (2.0 * double(cfg.N) * double(cfg.N));
}

RieszMode riesz_mode(const KernelSpec& spec) {
  if (spec.family == KernelFamily::SmoothBounded)
    throw std::invalid_argument("riesz_mode: riesz/log kernels only");
  const double s = spec.family == KernelFamily::Log ? 0.0 : spec.s;
  if (s < double(spec.d) - 2.0) return RieszMode::Subcoulomb;
  return spec.family == KernelFamily::Log ? RieszMode::Log : RieszMode::Supercoulomb;
}

double riesz_lower_bound(int N, double sup_mu, const KernelSpec& spec,
                         const TheoryConstants& constants) {
  const double s = spec.family == KernelFamily::Log ? 0.0 : spec.s;
  const double d = double(spec.d);
  const double C = constants.c_riesz;
  const double nm = double(N) * sup_mu;
  if (s >= d - 2.0) {
    double log_term = (s == 0.0) ? std::log(nm) / (2.0 * double(N) * d) : 0.0;
    return -(log_term + C * std::pow(sup_mu, s / d) * std::pow(double(N), s / d - 1.0));
  }
  double log_term = (s == 0.0) ? C * std::log(nm) / double(N) : 0.0;
  double expo = -2.0 * (d - s) / (2.0 * (d - s) + s * (d + 2.0));
  return -(log_term + C * std::pow(sup_mu, s / d) * std::pow(double(N), expo));
}

ErrorTerms error_terms(int N, double sup_mu, const KernelSpec& spec,
                       const TheoryConstants& constants) {
  ErrorTerms e;
  e.mode = riesz_mode(spec);
  if (e.mode == RieszMode::Subcoulomb)
    throw std::invalid_argument("error_terms: sub-Coulomb o_N needs the density (fractional norm)");
  e.o_n = -riesz_lower_bound(N, sup_mu, spec, constants);
  return e;
}

ErrorTerms error_terms(int N, const GridDensity& mu, const KernelSpec& spec,
                       const TheoryConstants& constants) {
  ErrorTerms e;
  e.mode = riesz_mode(spec);
  const double sup_mu = mu.sup_norm();
  if (e.mode != RieszMode::Subcoulomb) {
    e.o_n = -riesz_lower_bound(N, sup_mu, spec, constants);
    return e;
  }
  // sub-Coulomb branch: fractional sup-norm factor from the discrete
  // fractional Laplacian of order s+1-d
  const double s = spec.family == KernelFamily::Log ? 0.0 : spec.s;
  const double d = double(spec.d);
  const double gamma = 2.0 * (d - s) / (d + 2.0);
  double frac_norm = 0.0;
  const double alpha = s + 1.0 - d;
  if (alpha > 0.0 && alpha < 2.0) {
    GridField f{mu.grid, mu.values};
    GridField fl = fractional_laplacian(f, alpha);
    for (double v : fl.values) frac_norm = std::max(frac_norm, std::abs(v));
  } else {
    frac_norm = sup_mu;  // degenerate order: fall back to the density itself
  }
  double e1 = -(s + 1.0 + gamma) / ((s + gamma) * (1.0 + s));
  double e2 = -gamma / ((s + gamma) * (1.0 + s));
  e.o_n = constants.c_riesz * (frac_norm * std::pow(double(N), e1) +
                               std::pow(sup_mu, (2.0 + s) / (d + 2.0)) * std::pow(double(N), e2));
  if (s == 0.0) e.o_n += constants.c_riesz * std::log(double(N) * sup_mu) / double(N);
  return e;
}

GridField fractional_laplacian(const GridField& f, double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw std::invalid_argument("fractional_laplacian: order must be in (0,2)");
  const int n = f.n();
  const double h = f.grid.h();
  // Grunwald-Letnikov weights w_j = (-1)^j binom(alpha, j)
  std::vector<double> w(size_t(n), 0.0);
  w[0] = 1.0;
  for (int j = 1; j < n; ++j)
    w[size_t(j)] = w[size_t(j - 1)] * (double(j) - 1.0 - alpha) / double(j);
  const double scale = 1.0 / (2.0 * std::cos(std::numbers::pi * alpha / 2.0) * std::pow(h, alpha));
  GridField out{f.grid, std::vector<double>(size_t(n), 0.0)};
  for (int k = 0; k < n; ++k) {
    double right = 0.0, left = 0.0;
    for (int j = 0; j <= k; ++j) right += w[size_t(j)] * f[k - j];
    for (int j = 0; k + j < n; ++j) left += w[size_t(j)] * f[k + j];
    out[k] = scale * (right + left);
  }
  return out;
}

namespace {

struct LogMeanExp {
  double log_mean = 0.0;
  double std_error = 0.0;  // jackknife on the log estimate
  double ess = 0.0;
};

LogMeanExp log_mean_exp(const std::vector<double>& w) {
  const int m = int(w.size());
  const double wmax = *std::max_element(w.begin(), w.end());
  double sum = 0.0, sum2 = 0.0;
  for (double v : w) {
    double u = std::exp(v - wmax);
    sum += u;
    sum2 += u * u;
  }
  LogMeanExp out;
  out.log_mean = wmax + std::log(sum / m);
  out.ess = sum * sum / sum2;
  // delete-one jackknife
  double mean_theta = 0.0;
  std::vector<double> theta(size_t(m), 0.0);
  for (int i = 0; i < m; ++i) {
    double u = std::exp(w[size_t(i)] - wmax);
    theta[size_t(i)] = wmax + std::log((sum - u) / (m - 1));
    mean_theta += theta[size_t(i)];
  }
  mean_theta /= m;
  double var = 0.0;
  for (double t : theta) var += (t - mean_theta) * (t - mean_theta);
  out.std_error = std::sqrt(var * double(m - 1) / double(m));
  return out;
}

}  // namespace

LogPartitionEstimate log_partition_estimate(const GridDensity& mu, const KernelSpec& spec,
                                            double beta, int N, int M_samples, CounterRng& rng) {
  if (N > 16)
    throw std::invalid_argument("log_partition_estimate: N > 16 degrades importance sampling");
  if (M_samples < 2) throw std::invalid_argument("log_partition_estimate: need >= 2 samples");
  std::vector<double> w(size_t(M_samples), 0.0);
  for (int m = 0; m < M_samples; ++m) {
    ParticleConfig cfg = sample_iid(mu, N, rng);
    auto b = modulated_energy(cfg, mu, spec);
    w[size_t(m)] = -beta * double(N) * b.total;
  }
  LogMeanExp lme = log_mean_exp(w);
  if (lme.ess < 30.0)
    throw std::runtime_error("log_partition_estimate: effective sample size " +
                             std::to_string(lme.ess) + " < 30; estimate unreliable");
  return LogPartitionEstimate{lme.log_mean, lme.std_error, lme.ess};
}

ExpMomentCheck exponential_moment_check(const GridDensity& mu, const KernelSpec& spec, double beta,
                                        int N, const std::vector<ParticleConfig>& q_samples,
                                        int M_is, CounterRng& rng) {
  if (q_samples.empty()) throw std::invalid_argument("exponential_moment_check: no Q samples");
  std::vector<double> w;
  w.reserve(q_samples.size());
  for (const auto& cfg : q_samples)
    w.push_back(0.5 * beta * double(N) * modulated_energy(cfg, mu, spec).total);
  LogMeanExp lhs = log_mean_exp(w);
  auto k_half = log_partition_estimate(mu, spec, 0.5 * beta, N, M_is, rng);
  auto k_full = log_partition_estimate(mu, spec, beta, N, M_is, rng);
  ExpMomentCheck out;
  out.lhs = lhs.log_mean;
  out.lhs_error = lhs.std_error;
  out.rhs = k_half.estimate - k_full.estimate;
  out.rhs_error = std::hypot(k_half.std_error, k_full.std_error);
  return out;
}

// ------------------------------------------------------------- commutator

namespace {

// primitive of r g'(r) (odd)
double rgprime_primitive(const KernelSpec& spec, double r) {
  const double a = std::abs(r), sg = r < 0 ? -1.0 : 1.0;
  if (a == 0.0) return 0.0;
  switch (spec.family) {
    case KernelFamily::Log:
      return -r;  // r g' = -1
    case KernelFamily::Riesz:
      return -sg * std::pow(a, 1.0 - spec.s) / (1.0 - spec.s);  // r g' = -|r|^{-s}
    case KernelFamily::SmoothBounded:
      break;
  }
  throw std::invalid_argument("rgprime_primitive: singular kernels only");
}

// per-cell linear representation of a grid field
struct LinearField {
  const GridField& f;
  std::vector<double> slope;
  explicit LinearField(const GridField& field) : f(field) {
    GridField g = grad_field(field);
    slope = std::move(g.values);
  }
  double value(double x) const {
    int k = cell(x);
    return f[k] + slope[size_t(k)] * (x - f.grid.center(k));
  }
  int cell(double x) const {
    int k = int(std::floor((x - f.grid.lo) / f.grid.h()));
    return std::max(0, std::min(f.grid.n - 1, k));
  }
};

// Int_cell (v(x) - v(y)) g'(x - y) dy with the per-cell linear v; exact
// primitives, finite even when x lies inside the cell (the combined
// integrand is bounded there).
double cross_cell_integral(const KernelSpec& spec, const LinearField& v, double x, double vx,
                           int l) {
  const auto& g = v.f.grid;
  const double a = g.left(l), b = a + g.h(), c = g.center(l);
  const double sl = v.slope[size_t(l)];
  const double A = vx - v.f[l] - sl * (x - c);
  double term1 = 0.0;
  if (spec.family == KernelFamily::SmoothBounded) {
    term1 = A * (kernel_value_r(spec, x - a) - kernel_value_r(spec, x - b));
    // rmoment part by 2-pt Gauss (smooth)
    const double o = 0.5 * g.h() / std::sqrt(3.0);
    double mid = 0.5 * (a + b);
    auto rg = [&](double y) {
      double r = x - y;
      return r == 0.0 ? 0.0 : r * kernel_deriv_r(spec, r);
    };
    return term1 + sl * 0.5 * g.h() * (rg(mid - o) + rg(mid + o));
  }
  if (x > a && x < b) {
    // self cell: A vanishes identically for v given by its own linear rep
    // (vx passed in is that rep), keep only the bounded moment part
    term1 = 0.0;
  } else {
    term1 = A * (kernel_value_r(spec, x - a) - kernel_value_r(spec, x - b));
  }
  // Int (x - y)... the slope part: -s_l Int (y - x) g'(x-y) dy
  //   = s_l [Rm(x-a) - Rm(x-b)],  Rm the primitive of r g'(r)
  double term2 = sl * (rgprime_primitive(spec, x - a) - rgprime_primitive(spec, x - b));
  return term1 + term2;
}

double cross_at(const KernelSpec& spec, const LinearField& v, const GridDensity& mu, double x) {
  const double vx = v.value(x);
  double acc = 0.0;
  for (int l = 0; l < mu.n(); ++l)
    if (mu[l] != 0.0) acc += mu[l] * cross_cell_integral(spec, v, x, vx, l);
  return acc;
}

}  // namespace

double commutator_functional(const GridField& v, const ParticleConfig& cfg, const GridDensity& mu,
                             const KernelSpec& spec) {
  if (cfg.d != 1) throw std::invalid_argument("commutator_functional: d=1 only");
  if (!(v.grid == mu.grid)) throw std::invalid_argument("commutator_functional: grid mismatch");
  const int N = cfg.N;
  LinearField lv(v);

  double pair = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double r = cfg.at(i, 0) - cfg.at(j, 0);
      if (r == 0.0 && spec.singular())
        throw std::invalid_argument("commutator_functional: coincident points");
      double gp = (r == 0.0) ? 0.0 : kernel_deriv_r(spec, r);
      pair += 2.0 * (lv.value(cfg.at(i, 0)) - lv.value(cfg.at(j, 0))) * gp;
    }
  pair /= double(N) * double(N);

  double cross = 0.0;
  for (int i = 0; i < N; ++i) cross += cross_at(spec, lv, mu, cfg.at(i, 0));
  cross /= double(N);

  double background = 0.0;
  for (int k = 0; k < mu.n(); ++k)
    if (mu[k] != 0.0) background += mu[k] * cross_at(spec, lv, mu, mu.grid.center(k));
  background *= mu.grid.h();

  return pair - 2.0 * cross + background;
}

// ------------------------------------------------------------- marginals

namespace {

double grid_quantile(const GridDensity& mu, double p) {
  const double h = mu.grid.h();
  double acc = 0.0;
  for (int k = 0; k < mu.n(); ++k) {
    double cell = mu[k] * h;
    if (acc + cell >= p && cell > 0.0) return mu.grid.left(k) + (p - acc) / cell * h;
    acc += cell;
  }
  return mu.grid.hi;
}

}  // namespace

MarginalDistances marginal_distances(const std::vector<ParticleConfig>& configs,
                                     const GridDensity& reference, int k) {
  if (k != 1 && k != 2) throw std::invalid_argument("marginal_distances: k must be 1 or 2");
  const int bins = 64;
  const long need = k == 1 ? 2000L : 100L * bins * bins;  // ~30 per bin for k = 1

  std::vector<double> xs;
  for (const auto& cfg : configs) {
    if (cfg.d != 1) throw std::invalid_argument("marginal_distances: d=1 only");
    for (int i = 0; i < cfg.N; ++i) xs.push_back(cfg.at(i, 0));
  }
  if (k == 1 && long(xs.size()) < need)
    throw std::invalid_argument("marginal_distances: insufficient samples");

  MarginalDistances out;
  const auto& g = reference.grid;
  const double bw = (g.hi - g.lo) / bins;
  auto bin_of = [&](double x) {
    int b = int(std::floor((x - g.lo) / bw));
    return std::max(0, std::min(bins - 1, b));
  };
  // reference per-bin probabilities from the grid density
  std::vector<double> ref(size_t(bins), 0.0);
  for (int c = 0; c < reference.n(); ++c)
    ref[size_t(bin_of(g.center(c)))] += reference[c] * g.h();
  double ref_sum = std::accumulate(ref.begin(), ref.end(), 0.0);
  for (double& r : ref) r /= ref_sum;

  const double alpha = 0.5;
  if (k == 1) {
    std::sort(xs.begin(), xs.end());
    double w2sq = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      double q = grid_quantile(reference, (double(i) + 0.5) / double(xs.size()));
      w2sq += (xs[i] - q) * (xs[i] - q);
    }
    out.w2 = std::sqrt(w2sq / double(xs.size()));

    std::vector<double> cnt(size_t(bins), 0.0);
    for (double x : xs) cnt[size_t(bin_of(x))] += 1.0;
    double total = double(xs.size());
    for (int b = 0; b < bins; ++b) {
      double p = (cnt[size_t(b)] + alpha) / (total + alpha * bins);
      double q = std::max(ref[size_t(b)], 1e-300);
      out.tv += std::abs(p - q);
      out.kl += p * std::log(p / q);
    }
    out.tv *= 0.5;
    return out;
  }

  // k = 2: all ordered pairs within each configuration
  long n_pairs = 0;
  std::vector<double> cnt(size_t(bins * bins), 0.0);
  for (const auto& cfg : configs)
    for (int i = 0; i < cfg.N; ++i)
      for (int j = 0; j < cfg.N; ++j) {
        if (i == j) continue;
        cnt[size_t(bin_of(cfg.at(i, 0)) * bins + bin_of(cfg.at(j, 0)))] += 1.0;
        ++n_pairs;
      }
  if (n_pairs < need) throw std::invalid_argument("marginal_distances: insufficient samples");
  for (int b1 = 0; b1 < bins; ++b1)
    for (int b2 = 0; b2 < bins; ++b2) {
      double p = (cnt[size_t(b1 * bins + b2)] + alpha) / (double(n_pairs) + alpha * bins * bins);
      double q = std::max(ref[size_t(b1)] * ref[size_t(b2)], 1e-300);
      out.tv += std::abs(p - q);
      out.kl += p * std::log(p / q);
    }
  out.tv *= 0.5;
  return out;
}

double calibrate_c_riesz(const std::vector<double>& f_n_samples, int N, double sup_mu,
                         const KernelSpec& spec) {
  // bound(C) = -(L + C*A): L is the C-independent log part, A multiplies C
  const double s = spec.family == KernelFamily::Log ? 0.0 : spec.s;
  const double d = double(spec.d);
  double L = 0.0, A = 0.0;
  if (s >= d - 2.0) {
    L = (s == 0.0) ? std::log(double(N) * sup_mu) / (2.0 * double(N) * d) : 0.0;
    A = std::pow(sup_mu, s / d) * std::pow(double(N), s / d - 1.0);
  } else {
    L = 0.0;  // the sub-Coulomb log part carries C itself
    double expo = -2.0 * (d - s) / (2.0 * (d - s) + s * (d + 2.0));
    A = std::pow(sup_mu, s / d) * std::pow(double(N), expo);
    if (s == 0.0) A += std::log(double(N) * sup_mu) / double(N);
  }
  double c = 0.0;
  for (double f : f_n_samples) c = std::max(c, (-f - L) / A);
  return c;
}

double calibrate_c_me(const std::vector<double>& commutator_values,
                      const std::vector<double>& f_n_values, double grad_v_sup, double o_n) {
  if (commutator_values.size() != f_n_values.size())
    throw std::invalid_argument("calibrate_c_me: size mismatch");
  double c = 0.0;
  for (size_t i = 0; i < commutator_values.size(); ++i) {
    double denom = grad_v_sup * (f_n_values[i] + o_n);
    if (denom > 0.0) c = std::max(c, std::abs(commutator_values[i]) / denom);
  }
  return c;
}

}  // namespace chaoslab
