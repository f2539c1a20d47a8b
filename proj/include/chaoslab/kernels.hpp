#ifndef CHAOSLAB_KERNELS_HPP
#define CHAOSLAB_KERNELS_HPP

#include <array>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

// Interaction kernels g and confinement potentials V with exact derivatives.
// All kernel formulas live here; every other module consumes this interface.

namespace chaoslab {

using Vec3 = std::array<double, 3>;

enum class KernelFamily {
  Log,           // g(r) = -log|r|            (the s = 0 Riesz member)
  Riesz,         // g(r) = (1/s)|r|^{-s},  0 < s < d
  SmoothBounded  // built-in C^2 tables, finite on the diagonal
};

enum class SmoothTable { Zero, Constant, GaussianBump, Cosine };

struct KernelSpec {
  KernelFamily family = KernelFamily::Log;
  double s = 0.0;                        // Riesz exponent; 0 for Log
  int d = 1;                             // ambient dimension, in {1,2,3}
  SmoothTable table = SmoothTable::Zero; // SmoothBounded only
  double constant = 0.0;                 // SmoothTable::Constant value

  bool singular() const { return family != KernelFamily::SmoothBounded; }
  void validate() const;

  static KernelSpec log_kernel(int d = 1) { return {KernelFamily::Log, 0.0, d}; }
  static KernelSpec riesz(double s, int d = 1) { return {KernelFamily::Riesz, s, d}; }
  static KernelSpec smooth(SmoothTable t, int d = 1, double c = 0.0) {
    return {KernelFamily::SmoothBounded, 0.0, d, t, c};
  }
};

enum class ConfinementForm { Quadratic, Quartic, Table };

struct ConfinementSpec {
  ConfinementForm form = ConfinementForm::Quadratic;
  double kappa = 1.0;       // quadratic: V(x) = kappa |x|^2 / 2
  double a = 1.0, b = 0.0;  // quartic:   V(x) = a |x|^4 + b |x|^2
  int d = 1;

  // cubic-spline table on a uniform abscissa (1D only)
  std::vector<double> table_x, table_v;

  static ConfinementSpec quadratic(double kappa, int d = 1) {
    ConfinementSpec c;
    c.form = ConfinementForm::Quadratic;
    c.kappa = kappa;
    c.d = d;
    return c;
  }
  static ConfinementSpec quartic(double a, double b, int d = 1) {
    ConfinementSpec c;
    c.form = ConfinementForm::Quartic;
    c.a = a;
    c.b = b;
    c.d = d;
    return c;
  }
};

// Radial kernel value; +inf on the diagonal for singular families.
double kernel_value_r(const KernelSpec& spec, double r);

// g(x,y).  Returns +inf at x = y for Log/Riesz.
double kernel_eval(const KernelSpec& spec, const Vec3& x, const Vec3& y);

// nabla_1 g(x,y), the gradient in the first argument.
// Throws std::domain_error at x = y for singular families.
Vec3 kernel_grad(const KernelSpec& spec, const Vec3& x, const Vec3& y);

// Radial derivative g'(r), r != 0 (signed: d/dr of the 1D profile).
double kernel_deriv_r(const KernelSpec& spec, double r);

// 1D radial second derivative g''(r), r > 0.  Positive for Log/Riesz.
double kernel_second_derivative(const KernelSpec& spec, double r);

double confinement_eval(const ConfinementSpec& spec, const Vec3& x);
Vec3 confinement_grad(const ConfinementSpec& spec, const Vec3& x);
double confinement_hess(const ConfinementSpec& spec, const Vec3& x);

// 1D conveniences
inline double kernel_eval1(const KernelSpec& s, double x, double y) {
  return kernel_eval(s, {x, 0, 0}, {y, 0, 0});
}
inline double kernel_grad1(const KernelSpec& s, double x, double y) {
  return kernel_grad(s, {x, 0, 0}, {y, 0, 0})[0];
}
inline double confinement_eval1(const ConfinementSpec& s, double x) {
  return confinement_eval(s, {x, 0, 0});
}
inline double confinement_grad1(const ConfinementSpec& s, double x) {
  return confinement_grad(s, {x, 0, 0})[0];
}
inline double confinement_hess1(const ConfinementSpec& s, double x) {
  return confinement_hess(s, {x, 0, 0});
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace chaoslab

#endif
