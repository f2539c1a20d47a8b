#ifndef CHAOSLAB_LIOUVILLE_HPP
#define CHAOSLAB_LIOUVILLE_HPP

#include <vector>

#include "chaoslab/grid.hpp"

// Brute-force joint Fokker-Planck solver on (grid)^N for N in {2,3}, d=1.
// Exact desk-scale access to f_N^t, relative entropies, modulated free
// energy, modulated Fisher information, and the dissipation/decay audits.
//
// Flat indexing: idx = k_1 + n k_2 (+ n^2 k_3), coordinate 1 fastest.

namespace chaoslab {

struct JointDensity {
  Grid1D grid;
  int N = 2;
  std::vector<double> values;  // n^N nonnegative cell averages, h^N sum == 1
  bool symmetric = true;

  long size() const { return long(values.size()); }
  double mass() const;
  void normalize();
  double symmetry_defect() const;  // sup |f(..perm..) - f| over the swap (1,2)

  // throws when n^N exceeds the 2^27-entry budget or N is not 2 or 3
  static void check_budget(int n, int N);
};

JointDensity build_product(const GridDensity& mu, int N);
JointDensity build_gibbs(const KernelSpec& spec, const ConfinementSpec& V, double beta,
                         const Grid1D& grid, int N);
// e^{-beta N F_N} times the product of mu, cell-pair kernel integrals on the
// diagonal as everywhere else, then normalized.
JointDensity build_modulated_gibbs(const GridDensity& mu, const KernelSpec& spec, double beta,
                                   int N);
// (1/2)(a (x) b + b (x) a): symmetric, chaos-free, non-product.  N = 2 only.
JointDensity build_mixture(const GridDensity& a, const GridDensity& b);

// log K_{N,beta}(mu) = log Int e^{-beta N F_N} dmu^{(x)N} by direct tensor
// summation (exact at grid resolution).
double log_partition_tensor(const GridDensity& mu, const KernelSpec& spec, double beta, int N);

// marginal of coordinate `coord` (sum over the others times h^{N-1})
GridDensity marginal_1(const JointDensity& f, int coord = 0);

// One dimension-split implicit step of
//   d_t f = (1/beta) Lap f + sum_i div_i( f [ (1/N) sum_{j != i} grad_1 g + grad V ] )
// Exponentially fitted faces keep the discrete Gibbs measure stationary and
// each sweep preserves mass and positivity.
JointDensity liouville_step(const JointDensity& f, const KernelSpec& spec,
                            const ConfinementSpec& V, double beta, double dt);

// (1/N) h^N sum f log(f/g).  Throws when f has mass above `floor` where g
// has none (absolute-continuity violation).
double relative_entropy(const JointDensity& f, const JointDensity& g, double floor = 1e-14);

struct FreeEnergyRecord {
  double t = 0.0;
  double h_rel = 0.0;      // (1/N) H(f | mu^{(x)N})
  double mean_F = 0.0;     // Int F_N df
  double e_n = 0.0;        // h_rel / beta + mean_F
  double e_script = 0.0;   // e_n + o_n
  double fisher = 0.0;     // (1/N) Int |grad sqrt(f/Q)|^2 dQ
  double commutator = 0.0; // Int [commutator functional of u] df
  double bound_rhs = 0.0;  // decay-inequality right-hand side at t
};

// Fills h_rel, mean_F, e_n (t and the rest left to the caller).
FreeEnergyRecord modulated_free_energy(const JointDensity& f, const GridDensity& mu,
                                       const KernelSpec& spec, double beta);

// (1/N) h^N sum_Q |D sqrt(f/Q)|^2, centered differences, Q the modulated
// Gibbs measure of mu.
double modulated_fisher(const JointDensity& f, const GridDensity& mu, const KernelSpec& spec,
                        double beta);

// Int [ Int Int_{x!=y} (u(x)-u(y)) g'(x-y) d(emp - mu)^{(x)2} ] df, the
// commutator term of the dissipation inequality, by tensor-grid quadrature.
double joint_commutator(const JointDensity& f, const GridField& u, const GridDensity& mu,
                        const KernelSpec& spec);

struct AuditEntry {
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs; negative means violation
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  int violations = 0;
  double worst_margin = 0.0;
};

// dE_N/dt (finite differences, centered interior / one-sided ends) against
// -(1/beta^2) fisher + (1/2)|commutator| + tol at every snapshot.
AuditReport dissipation_audit(const std::vector<FreeEnergyRecord>& records, double beta,
                              double tol_disc);

// fisher >= H(f|Q)/c_ls = (beta e_n + log_k / N) / c_ls at every snapshot
// (within tol).
AuditReport lsi_chain_audit(const std::vector<FreeEnergyRecord>& records,
                            const std::vector<double>& log_k, double beta, int N, double c_ls,
                            double tol);

struct GronwallInputs {
  std::vector<double> o_n;      // additive error o_N^t per snapshot
  std::vector<double> odot_n;   // its time derivative (finite differences)
  std::vector<double> u_star;   // C * ||u^t||_* per snapshot (commutator constant folded in)
  std::vector<double> log_k;    // log K_{N,beta}(mu^t) per snapshot
};

struct GronwallReport {
  AuditReport bound;      // e_script <= decay RHS + tol per snapshot
  double fitted_rate = 0.0;    // empirical decay rate of H(f^t | Q(mu^t))
  double modulated_rate = 0.0; // 4 / (beta c_ls)
  double plain_rate = 0.0;     // 1 / (c_ls beta)
};

// Evaluates the decay-inequality right-hand side (exponential prefactors and
// the error-term integral, trapezoid rule) and writes it into each record's
// bound_rhs.  Throws when c_ls <= 0 (no LSI certificate).
GronwallReport gronwall_audit(std::vector<FreeEnergyRecord>& records, double c_ls, double beta,
                              int N, const GronwallInputs& in, double tol);

}  // namespace chaoslab

#endif
