#include "chaoslab/liouville.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chaoslab {

namespace {

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

long ipow(long b, int e) {
  long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

inline long idx3(int a, int b, int c, int n) { return a + long(n) * b + long(n) * n * c; }

inline void decode(long idx, int n, int N, int* k) {
  for (int i = 0; i < N; ++i) {
    k[i] = int(idx % n);
    idx /= n;
  }
}

// F_N on a tensor cell, with the cell-pair averaged kernel everywhere
// (including equal-cell particle pairs).
struct CellEnergy {
  const KernelTable& table;
  const GridField& conv;  // cell-averaged g*mu
  double background;      // (1/2) Int Int g dmu dmu
  int N;

  double value(const int* k) const {
    double pair = 0.0, cross = 0.0;
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) pair += table.avg(std::abs(k[i] - k[j]));
      cross += conv[k[i]];
    }
    return pair / (double(N) * double(N)) - cross / double(N) + background;
  }
};

}  // namespace

double JointDensity::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * std::pow(grid.h(), N);
}

void JointDensity::normalize() {
  double m = mass();
  if (!(m > 0.0)) throw std::runtime_error("joint density: nonpositive mass");
  for (double& v : values) v /= m;
}

double JointDensity::symmetry_defect() const {
  const int n = grid.n;
  const long rest = ipow(n, N - 2);
  double worst = 0.0;
  for (long r = 0; r < rest; ++r)
    for (int k2 = 0; k2 < n; ++k2)
      for (int k1 = 0; k1 < k2; ++k1) {
        long a = k1 + long(n) * k2 + long(n) * long(n) * r;
        long b = k2 + long(n) * k1 + long(n) * long(n) * r;
        worst = std::max(worst, std::abs(values[size_t(a)] - values[size_t(b)]));
      }
  return worst;
}

void JointDensity::check_budget(int n, int N) {
  if (N != 2 && N != 3) throw std::invalid_argument("joint density: N must be 2 or 3");
  if ((N == 2 && n > 512) || (N == 3 && n > 128))
    throw std::invalid_argument("joint density: grid too fine for the tensor budget");
  if (ipow(n, N) > (1L << 27)) throw std::invalid_argument("joint density: over 2^27 entries");
}

JointDensity build_product(const GridDensity& mu, int N) {
  JointDensity::check_budget(mu.grid.n, N);
  const int n = mu.grid.n;
  JointDensity f{mu.grid, N, std::vector<double>(size_t(ipow(n, N))), true};
  int k[3];
  for (long idx = 0; idx < f.size(); ++idx) {
    decode(idx, n, N, k);
    double v = 1.0;
    for (int i = 0; i < N; ++i) v *= mu[k[i]];
    f.values[size_t(idx)] = v;
  }
  return f;
}

namespace {

JointDensity from_log_weights(const Grid1D& grid, int N, std::vector<double> logw) {
  double wmax = -kInf;
  for (double v : logw) wmax = std::max(wmax, v);
  if (!(wmax > -kInf)) throw std::runtime_error("joint density: all weights vanish");
  JointDensity f{grid, N, std::move(logw), true};
  for (double& v : f.values) v = std::isinf(v) ? 0.0 : std::exp(v - wmax);
  f.normalize();
  return f;
}

}  // namespace

JointDensity build_gibbs(const KernelSpec& spec, const ConfinementSpec& V, double beta,
                         const Grid1D& grid, int N) {
  JointDensity::check_budget(grid.n, N);
  const int n = grid.n;
  KernelTable table = KernelTable::build(spec, grid);
  std::vector<double> vc(size_t(n), 0.0);
  for (int kk = 0; kk < n; ++kk) vc[size_t(kk)] = confinement_eval1(V, grid.center(kk));
  std::vector<double> logw(size_t(ipow(n, N)));
  int k[3];
  for (long idx = 0; idx < long(logw.size()); ++idx) {
    decode(idx, n, N, k);
    double pair = 0.0, conf = 0.0;
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) pair += table.avg(std::abs(k[i] - k[j]));
      conf += vc[size_t(k[i])];
    }
    logw[size_t(idx)] = -beta * (pair / double(N) + conf);
  }
  return from_log_weights(grid, N, std::move(logw));
}

JointDensity build_modulated_gibbs(const GridDensity& mu, const KernelSpec& spec, double beta,
                                   int N) {
  JointDensity::check_budget(mu.grid.n, N);
  const int n = mu.grid.n;
  KernelTable table = KernelTable::build(spec, mu.grid);
  GridField conv = convolve_kernel(table, mu);
  CellEnergy F{table, conv, 0.5 * double_integral(table, mu, mu), N};
  std::vector<double> logmu(size_t(n), 0.0);
  for (int kk = 0; kk < n; ++kk)
    logmu[size_t(kk)] = mu[kk] > 0.0 ? std::log(mu[kk]) : -kInf;
  std::vector<double> logw(size_t(ipow(n, N)));
  int k[3];
  for (long idx = 0; idx < long(logw.size()); ++idx) {
    decode(idx, n, N, k);
    double lm = 0.0;
    for (int i = 0; i < N; ++i) lm += logmu[size_t(k[i])];
    logw[size_t(idx)] = std::isinf(lm) ? -kInf : -beta * double(N) * F.value(k) + lm;
  }
  return from_log_weights(mu.grid, N, std::move(logw));
}

JointDensity build_mixture(const GridDensity& a, const GridDensity& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("mixture: grid mismatch");
  JointDensity::check_budget(a.grid.n, 2);
  const int n = a.grid.n;
  JointDensity f{a.grid, 2, std::vector<double>(size_t(n) * size_t(n)), true};
  for (int k2 = 0; k2 < n; ++k2)
    for (int k1 = 0; k1 < n; ++k1)
      f.values[size_t(k1 + n * k2)] = 0.5 * (a[k1] * b[k2] + b[k1] * a[k2]);
  return f;
}

double log_partition_tensor(const GridDensity& mu, const KernelSpec& spec, double beta, int N) {
  JointDensity::check_budget(mu.grid.n, N);
  const int n = mu.grid.n;
  KernelTable table = KernelTable::build(spec, mu.grid);
  GridField conv = convolve_kernel(table, mu);
  CellEnergy F{table, conv, 0.5 * double_integral(table, mu, mu), N};
  std::vector<double> logmu(size_t(n), 0.0);
  for (int kk = 0; kk < n; ++kk)
    logmu[size_t(kk)] = mu[kk] > 0.0 ? std::log(mu[kk]) : -kInf;

  const long total = ipow(n, N);
  int k[3];
  double wmax = -kInf;
  std::vector<double> logw(size_t(total), 0.0);
  for (long idx = 0; idx < total; ++idx) {
    decode(idx, n, N, k);
    double lm = 0.0;
    for (int i = 0; i < N; ++i) lm += logmu[size_t(k[i])];
    logw[size_t(idx)] = std::isinf(lm) ? -kInf : -beta * double(N) * F.value(k) + lm;
    wmax = std::max(wmax, logw[size_t(idx)]);
  }
  double s = 0.0;
  for (double v : logw)
    if (!std::isinf(v)) s += std::exp(v - wmax);
  return wmax + std::log(s) + double(N) * std::log(mu.grid.h());
}

GridDensity marginal_1(const JointDensity& f, int coord) {
  if (coord < 0 || coord >= f.N) throw std::invalid_argument("marginal_1: bad coordinate");
  const int n = f.grid.n;
  std::vector<double> m(size_t(n), 0.0);
  int k[3];
  for (long idx = 0; idx < f.size(); ++idx) {
    decode(idx, n, f.N, k);
    m[size_t(k[coord])] += f.values[size_t(idx)];
  }
  const double w = std::pow(f.grid.h(), f.N - 1);
  for (double& v : m) v *= w;
  return GridDensity::from_values(f.grid, std::move(m));
}

JointDensity liouville_step(const JointDensity& f, const KernelSpec& spec,
                            const ConfinementSpec& V, double beta, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("liouville_step: dt must be > 0");
  const int n = f.grid.n;
  const int N = f.N;
  const double h = f.grid.h();
  const double D = 1.0 / beta;
  KernelTable table = KernelTable::build(spec, f.grid);
  std::vector<double> vc(size_t(n), 0.0);
  for (int kk = 0; kk < n; ++kk) vc[size_t(kk)] = confinement_eval1(V, f.grid.center(kk));

  JointDensity out = f;
  std::vector<double> U(size_t(n), 0.0), sub(size_t(n), 0.0), diag(size_t(n), 0.0), sup(size_t(n), 0.0),
      rhs(size_t(n), 0.0), c1(size_t(n - 1)), c2(size_t(n - 1));
  int k[3];

  for (int dim = 0; dim < N; ++dim) {
    const long stride = ipow(n, dim);
    const long total = ipow(n, N);
    // enumerate lines: indices with k[dim] == 0
    for (long base = 0; base < total; ++base) {
      decode(base, n, N, k);
      if (k[dim] != 0) continue;
      // conditional potential along the line
      for (int q = 0; q < n; ++q) {
        double pair = 0.0;
        for (int j = 0; j < N; ++j)
          if (j != dim) pair += table.avg(std::abs(q - k[j]));
        U[size_t(q)] = vc[size_t(q)] + pair / double(N);
      }
      for (int q = 0; q + 1 < n; ++q) {
        double dU = U[size_t(q + 1)] - U[size_t(q)];
        double delta = cc_delta(beta * dU);
        double a = dU / h;
        c1[size_t(q)] = a * delta - D / h;
        c2[size_t(q)] = a * (1.0 - delta) + D / h;
      }
      for (int q = 0; q < n; ++q) {
        double dqq = 0.0;
        sub[size_t(q)] = sup[size_t(q)] = 0.0;
        if (q + 1 < n) {
          dqq += c1[size_t(q)];
          sup[size_t(q)] = -dt * c2[size_t(q)] / h;
        }
        if (q > 0) {
          dqq -= c2[size_t(q - 1)];
          sub[size_t(q)] = dt * c1[size_t(q - 1)] / h;
        }
        diag[size_t(q)] = 1.0 - dt * dqq / h;
        rhs[size_t(q)] = out.values[size_t(base + stride * q)];
      }
      thomas_solve(sub, diag, sup, rhs);
      for (int q = 0; q < n; ++q)
        out.values[size_t(base + stride * q)] = std::max(rhs[size_t(q)], 0.0);
    }
  }
  // The sequential dimension sweeps leave an O(dt^2) permutation asymmetry
  // per step; the continuum flow of exchangeable drift preserves symmetry
  // exactly, so restore it by averaging over the coordinate swap group.
  if (f.symmetric) {
    if (N == 2) {
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
          double& x = out.values[size_t(a + long(n) * b)];
          double& y = out.values[size_t(b + long(n) * a)];
          double m = 0.5 * (x + y);
          x = y = m;
        }
    } else if (N == 3) {
      for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b)
          for (int c = b; c < n; ++c) {
            long perm[6] = {idx3(a, b, c, n), idx3(a, c, b, n), idx3(b, a, c, n),
                            idx3(b, c, a, n), idx3(c, a, b, n), idx3(c, b, a, n)};
            double m = 0.0;
            for (long p : perm) m += out.values[size_t(p)];
            m /= 6.0;
            for (long p : perm) out.values[size_t(p)] = m;
          }
    }
  }
  return out;
}

double relative_entropy(const JointDensity& f, const JointDensity& g, double floor) {
  if (!(f.grid == g.grid) || f.N != g.N)
    throw std::invalid_argument("relative_entropy: shape mismatch");
  double acc = 0.0, escaped = 0.0;
  const double hN = std::pow(f.grid.h(), f.N);
  for (long idx = 0; idx < f.size(); ++idx) {
    double fv = f.values[size_t(idx)];
    if (fv <= floor) continue;
    double gv = g.values[size_t(idx)];
    if (gv <= floor) {
      // clamp g to the floor; only a substantial amount of f-mass outside
      // the (floored) support of g is an absolute-continuity violation
      escaped += fv * hN;
      gv = floor;
    }
    acc += fv * std::log(fv / gv);
  }
  if (escaped > std::max(floor, 1e-10))
    throw std::domain_error("relative_entropy: f has mass where g vanishes");
  return acc * hN / double(f.N);
}

FreeEnergyRecord modulated_free_energy(const JointDensity& f, const GridDensity& mu,
                                       const KernelSpec& spec, double beta) {
  if (!(f.grid == mu.grid)) throw std::invalid_argument("modulated_free_energy: grid mismatch");
  const int n = f.grid.n, N = f.N;
  KernelTable table = KernelTable::build(spec, f.grid);
  GridField conv = convolve_kernel(table, mu);
  CellEnergy F{table, conv, 0.5 * double_integral(table, mu, mu), N};
  std::vector<double> logmu(size_t(n), 0.0);
  for (int kk = 0; kk < n; ++kk)
    logmu[size_t(kk)] = mu[kk] > 0.0 ? std::log(mu[kk]) : -kInf;

  const double cell = std::pow(f.grid.h(), N);
  const double floor = 1e-14;
  double h_rel = 0.0, mean_f = 0.0;
  int k[3];
  for (long idx = 0; idx < f.size(); ++idx) {
    double fv = f.values[size_t(idx)];
    if (fv <= 0.0) continue;
    decode(idx, n, N, k);
    mean_f += fv * F.value(k);
    if (fv <= floor) continue;
    double lm = 0.0;
    for (int i = 0; i < N; ++i) lm += logmu[size_t(k[i])];
    if (std::isinf(lm))
      throw std::domain_error("modulated_free_energy: f charges a cell outside supp mu");
    h_rel += fv * (std::log(fv) - lm);
  }
  FreeEnergyRecord rec;
  rec.h_rel = h_rel * cell / double(N);
  rec.mean_F = mean_f * cell;
  rec.e_n = rec.h_rel / beta + rec.mean_F;
  return rec;
}

double modulated_fisher(const JointDensity& f, const GridDensity& mu, const KernelSpec& spec,
                        double beta) {
  JointDensity q = build_modulated_gibbs(mu, spec, beta, f.N);
  const int n = f.grid.n, N = f.N;
  const double h = f.grid.h();
  const double floor = 1e-14;
  std::vector<double> r(f.values.size(), 0.0);
  for (long idx = 0; idx < f.size(); ++idx) {
    double fv = f.values[size_t(idx)], qv = q.values[size_t(idx)];
    if (qv > floor)
      r[size_t(idx)] = std::sqrt(fv / qv);
    else if (fv > floor)
      throw std::domain_error("modulated_fisher: f charges a cell outside supp Q");
  }
  double acc = 0.0;
  int k[3];
  for (long idx = 0; idx < f.size(); ++idx) {
    double qv = q.values[size_t(idx)];
    if (qv <= floor) continue;
    decode(idx, n, N, k);
    double grad2 = 0.0;
    for (int dim = 0; dim < N; ++dim) {
      const long stride = ipow(n, dim);
      const int kq = k[dim];
      double d;
      if (kq == 0)
        d = (r[size_t(idx + stride)] - r[size_t(idx)]) / h;
      else if (kq == n - 1)
        d = (r[size_t(idx)] - r[size_t(idx - stride)]) / h;
      else
        d = (r[size_t(idx + stride)] - r[size_t(idx - stride)]) / (2.0 * h);
      grad2 += d * d;
    }
    acc += qv * grad2;
  }
  return acc * std::pow(h, N) / double(N);
}

double joint_commutator(const JointDensity& f, const GridField& u, const GridDensity& mu,
                        const KernelSpec& spec) {
  if (!(f.grid == mu.grid) || !(u.grid == mu.grid))
    throw std::invalid_argument("joint_commutator: grid mismatch");
  const int n = f.grid.n, N = f.N;
  const double h = f.grid.h();
  KernelTable table = KernelTable::build(spec, f.grid);
  GridField slope = grad_field(u);

  // cell-pair averages of g'(x-y), r > 0 side; primitive of g' is g itself
  std::vector<double> gp(size_t(n), 0.0);
  for (int m = 1; m < n; ++m)
    gp[size_t(m)] = (kernel_primitive(spec, (m + 1) * h) - 2.0 * kernel_primitive(spec, m * h) +
                     kernel_primitive(spec, (m - 1) * h)) /
                    (h * h);

  // pairterm(k,l): cell-pair average of (u(x)-u(y)) g'(x-y)
  auto pairterm = [&](int kk, int ll) {
    if (kk == ll) return slope[kk] * table.rmoment(0);
    double sg = kk > ll ? 1.0 : -1.0;
    return (u[kk] - u[ll]) * sg * gp[size_t(std::abs(kk - ll))];
  };

  std::vector<double> cross(size_t(n), 0.0);
  for (int kk = 0; kk < n; ++kk) {
    double acc = 0.0;
    for (int ll = 0; ll < n; ++ll)
      if (mu[ll] != 0.0) acc += mu[ll] * pairterm(kk, ll);
    cross[size_t(kk)] = acc * h;
  }
  double background = 0.0;
  for (int kk = 0; kk < n; ++kk) background += mu[kk] * cross[size_t(kk)];
  background *= h;

  double total = 0.0;
  int k[3];
  for (long idx = 0; idx < f.size(); ++idx) {
    double fv = f.values[size_t(idx)];
    if (fv == 0.0) continue;
    decode(idx, n, N, k);
    double pair = 0.0, cr = 0.0;
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j)
        if (j != i) pair += pairterm(k[i], k[j]);
      cr += cross[size_t(k[i])];
    }
    total += fv * (pair / (double(N) * double(N)) - 2.0 * cr / double(N) + background);
  }
  return total * std::pow(h, N);
}

namespace {

// dE/dt by centered differences (one-sided at the ends)
double time_derivative(const std::vector<FreeEnergyRecord>& r, size_t m) {
  const size_t last = r.size() - 1;
  if (m == 0) return (r[1].e_n - r[0].e_n) / (r[1].t - r[0].t);
  if (m == last) return (r[last].e_n - r[last - 1].e_n) / (r[last].t - r[last - 1].t);
  return (r[m + 1].e_n - r[m - 1].e_n) / (r[m + 1].t - r[m - 1].t);
}

void finalize(AuditReport& rep) {
  rep.worst_margin = kInf;
  for (const auto& e : rep.entries) {
    rep.worst_margin = std::min(rep.worst_margin, e.margin);
    if (e.margin < 0.0) ++rep.violations;
  }
  if (rep.entries.empty()) rep.worst_margin = 0.0;
}

}  // namespace

AuditReport dissipation_audit(const std::vector<FreeEnergyRecord>& records, double beta,
                              double tol_disc) {
  if (records.size() < 2) throw std::invalid_argument("dissipation_audit: need >= 2 records");
  AuditReport rep;
  for (size_t m = 0; m < records.size(); ++m) {
    AuditEntry e;
    e.t = records[m].t;
    e.lhs = time_derivative(records, m);
    e.rhs = -records[m].fisher / (beta * beta) + 0.5 * std::abs(records[m].commutator) + tol_disc;
    e.margin = e.rhs - e.lhs;
    rep.entries.push_back(e);
  }
  finalize(rep);
  return rep;
}

AuditReport lsi_chain_audit(const std::vector<FreeEnergyRecord>& records,
                            const std::vector<double>& log_k, double beta, int N, double c_ls,
                            double tol) {
  if (records.size() != log_k.size())
    throw std::invalid_argument("lsi_chain_audit: series length mismatch");
  if (!(c_ls > 0.0)) throw std::invalid_argument("lsi_chain_audit: c_ls must be > 0");
  AuditReport rep;
  for (size_t m = 0; m < records.size(); ++m) {
    AuditEntry e;
    e.t = records[m].t;
    // H(f|Q) = beta E_N + log K / N (the rewriting identity)
    e.lhs = (beta * records[m].e_n + log_k[m] / double(N)) / c_ls;
    e.rhs = records[m].fisher + tol;
    e.margin = e.rhs - e.lhs;
    rep.entries.push_back(e);
  }
  finalize(rep);
  return rep;
}

GronwallReport gronwall_audit(std::vector<FreeEnergyRecord>& records, double c_ls, double beta,
                              int N, const GronwallInputs& in, double tol) {
  const size_t M = records.size();
  if (M < 2) throw std::invalid_argument("gronwall_audit: need >= 2 records");
  if (!(c_ls > 0.0))
    throw std::invalid_argument("gronwall_audit: no LSI certificate (c_ls <= 0)");
  if (in.o_n.size() != M || in.odot_n.size() != M || in.u_star.size() != M ||
      in.log_k.size() != M)
    throw std::invalid_argument("gronwall_audit: series length mismatch");

  const double rate = 4.0 / (beta * c_ls);
  // P(t) = Int_0^t u_star/2, A(t) = -rate*t + P(t), both on snapshot times
  std::vector<double> A(M);
  double P = 0.0;
  A[0] = 0.0;
  for (size_t m = 1; m < M; ++m) {
    double dt = records[m].t - records[m - 1].t;
    P += 0.5 * dt * 0.5 * (in.u_star[m] + in.u_star[m - 1]);
    A[m] = -rate * records[m].t + P;
  }
  auto integrand = [&](size_t m) {
    return std::exp(-A[m]) *
           (in.odot_n[m] + rate * (in.o_n[m] - in.log_k[m] / (beta * double(N))));
  };
  GronwallReport rep;
  double I = 0.0;
  double prev = integrand(0);
  for (size_t m = 0; m < M; ++m) {
    if (m > 0) {
      double cur = integrand(m);
      I += 0.5 * (records[m].t - records[m - 1].t) * (prev + cur);
      prev = cur;
    }
    records[m].bound_rhs = std::exp(A[m]) * (records[0].e_script + I);
    AuditEntry e;
    e.t = records[m].t;
    e.lhs = records[m].e_script;
    e.rhs = records[m].bound_rhs + tol;
    e.margin = e.rhs - e.lhs;
    rep.bound.entries.push_back(e);
  }
  finalize(rep.bound);

  // empirical decay rate of H(f^t | Q^t) = beta e_n - log K / N by a
  // least-squares line through log H
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int cnt = 0;
  for (size_t m = 0; m < M; ++m) {
    double hq = beta * records[m].e_n + in.log_k[m] / double(N);
    if (hq <= 1e-13) continue;
    double x = records[m].t, y = std::log(hq);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  rep.fitted_rate =
      cnt >= 2 ? -(double(cnt) * sxy - sx * sy) / (double(cnt) * sxx - sx * sx) : 0.0;
  rep.modulated_rate = rate;
  rep.plain_rate = 1.0 / (c_ls * beta);
  return rep;
}

}  // namespace chaoslab
