#ifndef CHAOSLAB_GRID_HPP
#define CHAOSLAB_GRID_HPP

#include <string>
#include <vector>

#include "chaoslab/kernels.hpp"

// 1D uniform-grid densities, quadrature, differential operators, and the
// singular convolution g*mu with exact per-cell antiderivatives.
//
// Convention used throughout the grid modules: densities are cell averages,
// and kernel interactions between cells use the exact integral of g over the
// cell pair (finite even on the diagonal since -log and |r|^{-s}, s<1, are
// locally integrable).  This makes double_integral exact for piecewise
// constant densities and gives every downstream identity (splitting,
// rewriting, Gibbs = modulated Gibbs) a consistent discrete meaning.

namespace chaoslab {

struct Grid1D {
  double lo = -1.0;
  double hi = 1.0;
  int n = 64;

  double h() const { return (hi - lo) / n; }
  double center(int k) const { return lo + (k + 0.5) * h(); }
  double left(int k) const { return lo + k * h(); }
  bool operator==(const Grid1D&) const = default;
  void validate() const;
};

struct GridField {
  Grid1D grid;
  std::vector<double> values;

  double operator[](int k) const { return values[size_t(k)]; }
  double& operator[](int k) { return values[size_t(k)]; }
  int n() const { return grid.n; }
};

struct GridDensity {
  Grid1D grid;
  std::vector<double> values;  // nonnegative cell averages, h*sum == 1

  double operator[](int k) const { return values[size_t(k)]; }
  int n() const { return grid.n; }
  double sup_norm() const;
  double mass() const;  // h * sum(values)

  // Normalizes nonnegative cell values into a valid density.
  static GridDensity from_values(const Grid1D& g, std::vector<double> vals);
  // Samples a pointwise density function at cell centers and normalizes.
  template <class F>
  static GridDensity from_function(const Grid1D& g, F&& f) {
    std::vector<double> v(size_t(g.n));
    for (int k = 0; k < g.n; ++k) v[size_t(k)] = f(g.center(k));
    return from_values(g, std::move(v));
  }
};

// Exact cell-pair kernel integrals, tabulated by distance index.
// avg(m) = (1/h^2) * Int_{cell_k x cell_l} g(x-y) dx dy,  m = |k-l|.
// rmoment(m) is the same average of (x-y) g'(x-y), used by the commutator
// functional near the diagonal.
struct KernelTable {
  KernelSpec spec;
  Grid1D grid;
  std::vector<double> avg_;
  std::vector<double> rmoment_;

  double avg(int m) const { return avg_[size_t(m)]; }
  double rmoment(int m) const { return rmoment_[size_t(m)]; }

  static KernelTable build(const KernelSpec& spec, const Grid1D& grid);
};

// First antiderivative of the radial kernel profile (odd in r); the
// pointwise convolution (g*mu)(x) = sum_l mu_l [P(x-a_l) - P(x-b_l)].
double kernel_primitive(const KernelSpec& spec, double r);
// Second antiderivative (even in r), zero at r = 0.
double kernel_primitive2(const KernelSpec& spec, double r);

// Throws for kernels the exact-integral machinery cannot handle (s >= 1 in d=1).
void require_convolvable(const KernelSpec& spec);

// Cell-averaged convolution field: value at cell k is the average of g*mu
// over cell k (exact for the piecewise-constant mu).
GridField convolve_kernel(const KernelSpec& spec, const GridDensity& mu);
GridField convolve_kernel(const KernelTable& table, const GridDensity& mu);
// Signed-measure variant (values need not be nonnegative, no normalization).
GridField convolve_signed(const KernelTable& table, const std::vector<double>& cell_values);

// Pointwise (g*mu)(x) and d/dx (g*mu)(x) at an arbitrary point, exact for
// piecewise-constant mu.  Used on particle positions.
double convolve_at(const KernelSpec& spec, const GridDensity& mu, double x);
double convolve_deriv_at(const KernelSpec& spec, const GridDensity& mu, double x);

// Double integral  Int Int g(x,y) dmu(x) dnu(y), exact cell-pair integrals.
double double_integral(const KernelSpec& spec, const GridDensity& mu, const GridDensity& nu);
double double_integral(const KernelTable& table, const GridDensity& mu, const GridDensity& nu);

// Central-difference gradient (one-sided at the ends).
GridField grad_field(const GridField& f);

// log of cell values; cells below the floor are clamped to log(floor).
GridField log_density(const GridDensity& mu, double floor = 1e-14);

// Int mu log mu (cells below the floor contribute zero).
double entropy(const GridDensity& mu, double floor = 1e-14);

// max over interior cells of |second central difference| / h^2.
double c2_seminorm(const GridField& f);

// Serialization: CSV ("x,value") and a binary snapshot with grid metadata.
void write_density_csv(const GridDensity& mu, const std::string& path);
void write_field_csv(const GridField& f, const std::string& path);
GridDensity read_density_csv(const std::string& path);
void write_density_binary(const GridDensity& mu, const std::string& path);
GridDensity read_density_binary(const std::string& path);

}  // namespace chaoslab

#endif
