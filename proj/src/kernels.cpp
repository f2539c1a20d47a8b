#include "chaoslab/kernels.hpp"

#include <cmath>

namespace chaoslab {

void KernelSpec::validate() const {
  if (d < 1 || d > 3) throw std::invalid_argument("kernel dimension must be in {1,2,3}");
  if (family == KernelFamily::Riesz && !(s > 0.0 && s < double(d)))
    throw std::invalid_argument("riesz kernel requires 0 < s < d");
}

namespace {

double dist(const Vec3& x, const Vec3& y, int d) {
  double r2 = 0;
  for (int k = 0; k < d; ++k) r2 += (x[k] - y[k]) * (x[k] - y[k]);
  return std::sqrt(r2);
}

double smooth_value(const KernelSpec& spec, double r) {
  switch (spec.table) {
    case SmoothTable::Zero: return 0.0;
    case SmoothTable::Constant: return spec.constant;
    case SmoothTable::GaussianBump: return std::exp(-r * r);
    case SmoothTable::Cosine: return std::cos(r);
  }
  return 0.0;
}

double smooth_deriv(const KernelSpec& spec, double r) {
  switch (spec.table) {
    case SmoothTable::Zero:
    case SmoothTable::Constant: return 0.0;
    case SmoothTable::GaussianBump: return -2.0 * r * std::exp(-r * r);
    case SmoothTable::Cosine: return -std::sin(r);
  }
  return 0.0;
}

double smooth_second(const KernelSpec& spec, double r) {
  switch (spec.table) {
    case SmoothTable::Zero:
    case SmoothTable::Constant: return 0.0;
    case SmoothTable::GaussianBump: return (4.0 * r * r - 2.0) * std::exp(-r * r);
    case SmoothTable::Cosine: return -std::cos(r);
  }
  return 0.0;
}

}  // namespace

double kernel_value_r(const KernelSpec& spec, double r) {
  r = std::abs(r);
  switch (spec.family) {
    case KernelFamily::Log:
      return r == 0.0 ? kInf : -std::log(r);
    case KernelFamily::Riesz:
      return r == 0.0 ? kInf : std::pow(r, -spec.s) / spec.s;
    case KernelFamily::SmoothBounded:
      return smooth_value(spec, r);
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& spec, const Vec3& x, const Vec3& y) {
  return kernel_value_r(spec, dist(x, y, spec.d));
}

double kernel_deriv_r(const KernelSpec& spec, double r) {
  const double a = std::abs(r), sg = r < 0 ? -1.0 : 1.0;
  switch (spec.family) {
    case KernelFamily::Log:
      return -sg / a;
    case KernelFamily::Riesz:
      return -sg * std::pow(a, -spec.s - 1.0);
    case KernelFamily::SmoothBounded:
      return sg * smooth_deriv(spec, a);
  }
  return 0.0;
}

Vec3 kernel_grad(const KernelSpec& spec, const Vec3& x, const Vec3& y) {
  const double r = dist(x, y, spec.d);
  if (r == 0.0 && spec.singular())
    throw std::domain_error("kernel_grad: coincident points for a singular kernel");
  Vec3 g{0, 0, 0};
  if (r == 0.0) return g;  // smooth radial profile has zero gradient at the origin
  double factor = 0.0;
  switch (spec.family) {
    case KernelFamily::Log: factor = -1.0 / (r * r); break;
    case KernelFamily::Riesz: factor = -std::pow(r, -spec.s - 2.0); break;
    case KernelFamily::SmoothBounded: factor = smooth_deriv(spec, r) / r; break;
  }
  for (int k = 0; k < spec.d; ++k) g[k] = factor * (x[k] - y[k]);
  return g;
}

double kernel_second_derivative(const KernelSpec& spec, double r) {
  if (!(r > 0.0)) throw std::domain_error("kernel_second_derivative: r must be > 0");
  switch (spec.family) {
    case KernelFamily::Log: return 1.0 / (r * r);
    case KernelFamily::Riesz: return spec.s * (spec.s + 1.0) * std::pow(r, -spec.s - 2.0);
    case KernelFamily::SmoothBounded: return smooth_second(spec, r);
  }
  return 0.0;
}

namespace {

// Natural cubic spline on a uniform abscissa; small tables only.
struct Spline {
  const ConfinementSpec& c;
  double eval(double x, int deriv) const {
    const auto& xs = c.table_x;
    const auto& vs = c.table_v;
    const size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("confinement table needs >= 2 points");
    // clamp to the table window and do local cubic (Catmull-Rom) interpolation
    double h = xs[1] - xs[0];
    double t = (x - xs[0]) / h;
    long i = std::lround(std::floor(t));
    i = std::max(0l, std::min(long(n) - 2, i));
    double u = t - double(i);
    auto v = [&](long k) { return vs[size_t(std::max(0l, std::min(long(n) - 1, k)))]; };
    double p0 = v(i - 1), p1 = v(i), p2 = v(i + 1), p3 = v(i + 2);
    double a = (-p0 + 3 * p1 - 3 * p2 + p3) / 2;
    double b = (2 * p0 - 5 * p1 + 4 * p2 - p3) / 2;
    double cc = (p2 - p0) / 2;
    switch (deriv) {
      case 0: return ((a * u + b) * u + cc) * u + p1;
      case 1: return ((3 * a * u + 2 * b) * u + cc) / h;
      default: return (6 * a * u + 2 * b) / (h * h);
    }
  }
};

}  // namespace

double confinement_eval(const ConfinementSpec& spec, const Vec3& x) {
  double r2 = 0;
  for (int k = 0; k < spec.d; ++k) r2 += x[k] * x[k];
  switch (spec.form) {
    case ConfinementForm::Quadratic: return 0.5 * spec.kappa * r2;
    case ConfinementForm::Quartic: return spec.a * r2 * r2 + spec.b * r2;
    case ConfinementForm::Table: return Spline{spec}.eval(x[0], 0);
  }
  return 0.0;
}

Vec3 confinement_grad(const ConfinementSpec& spec, const Vec3& x) {
  Vec3 g{0, 0, 0};
  double r2 = 0;
  for (int k = 0; k < spec.d; ++k) r2 += x[k] * x[k];
  switch (spec.form) {
    case ConfinementForm::Quadratic:
      for (int k = 0; k < spec.d; ++k) g[k] = spec.kappa * x[k];
      break;
    case ConfinementForm::Quartic:
      for (int k = 0; k < spec.d; ++k) g[k] = (4.0 * spec.a * r2 + 2.0 * spec.b) * x[k];
      break;
    case ConfinementForm::Table:
      g[0] = Spline{spec}.eval(x[0], 1);
      break;
  }
  return g;
}

double confinement_hess(const ConfinementSpec& spec, const Vec3& x) {
  // 1D second derivative (the LSI machinery is 1D only)
  double r2 = x[0] * x[0];
  switch (spec.form) {
    case ConfinementForm::Quadratic: return spec.kappa;
    case ConfinementForm::Quartic: return 12.0 * spec.a * r2 + 2.0 * spec.b;
    case ConfinementForm::Table: return Spline{spec}.eval(x[0], 2);
  }
  return 0.0;
}

}  // namespace chaoslab
