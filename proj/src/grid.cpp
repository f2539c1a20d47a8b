#include "chaoslab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace chaoslab {

void Grid1D::validate() const {
  if (!(lo < hi)) throw std::invalid_argument("grid: lo must be < hi");
  if (n < 16) throw std::invalid_argument("grid: n_cells must be >= 16");
}

double GridDensity::sup_norm() const {
  return *std::max_element(values.begin(), values.end());
}

double GridDensity::mass() const {
  return grid.h() * std::accumulate(values.begin(), values.end(), 0.0);
}

GridDensity GridDensity::from_values(const Grid1D& g, std::vector<double> vals) {
  g.validate();
  if (int(vals.size()) != g.n) throw std::invalid_argument("density: value count != n_cells");
  double sum = 0.0;
  for (double v : vals) {
    if (!(v >= 0.0)) throw std::invalid_argument("density: negative or NaN cell value");
    sum += v;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("density: zero total mass");
  const double scale = 1.0 / (sum * g.h());
  for (double& v : vals) v *= scale;
  return GridDensity{g, std::move(vals)};
}

void require_convolvable(const KernelSpec& spec) {
  spec.validate();
  if (spec.family == KernelFamily::Riesz && spec.s >= 1.0)
    throw std::invalid_argument(
        "convolve: riesz s >= 1 is not locally integrable against cell averages in d=1");
}

double kernel_primitive(const KernelSpec& spec, double r) {
  const double a = std::abs(r), sg = r < 0 ? -1.0 : 1.0;
  if (a == 0.0) return 0.0;
  switch (spec.family) {
    case KernelFamily::Log:
      return sg * (a - a * std::log(a));
    case KernelFamily::Riesz:
      return sg * std::pow(a, 1.0 - spec.s) / (spec.s * (1.0 - spec.s));
    case KernelFamily::SmoothBounded:
      break;
  }
  throw std::invalid_argument("kernel_primitive: no closed form for smooth tables");
}

double kernel_primitive2(const KernelSpec& spec, double r) {
  const double a = std::abs(r);
  if (a == 0.0) return 0.0;
  switch (spec.family) {
    case KernelFamily::Log:
      return a * a * (0.75 - 0.5 * std::log(a));
    case KernelFamily::Riesz:
      return std::pow(a, 2.0 - spec.s) / (spec.s * (1.0 - spec.s) * (2.0 - spec.s));
    case KernelFamily::SmoothBounded:
      break;
  }
  throw std::invalid_argument("kernel_primitive2: no closed form for smooth tables");
}

namespace {

// second antiderivative of (x-y) g'(x-y) profiles (even), zero at 0
double rmoment_primitive2(const KernelSpec& spec, double r) {
  const double a = std::abs(r);
  if (a == 0.0) return 0.0;
  switch (spec.family) {
    case KernelFamily::Log:
      // r g'(r) = -1
      return -0.5 * a * a;
    case KernelFamily::Riesz:
      // r g'(r) = -|r|^{-s}
      return -std::pow(a, 2.0 - spec.s) / ((1.0 - spec.s) * (2.0 - spec.s));
    case KernelFamily::SmoothBounded:
      break;
  }
  throw std::invalid_argument("rmoment_primitive2: singular kernels only");
}

// (1/h^2) Int_{-h}^{h} (h-|u|) f(m h + u) du by Gauss-Legendre on each half
template <class F>
double triangle_average(double h, int m, F&& f) {
  static const double gx[4] = {0.0694318442029737, 0.3300094782075719,
                               0.6699905217924281, 0.9305681557970263};
  static const double gw[4] = {0.1739274225687269, 0.3260725774312731,
                               0.3260725774312731, 0.1739274225687269};
  double acc = 0.0;
  for (int half = -1; half <= 1; half += 2)
    for (int q = 0; q < 4; ++q) {
      double u = half * gx[q] * h;
      acc += gw[q] * (h - std::abs(u)) * f(m * h + u) * h;
    }
  return acc / (h * h);
}

}  // namespace

KernelTable KernelTable::build(const KernelSpec& spec, const Grid1D& grid) {
  require_convolvable(spec);
  grid.validate();
  const double h = grid.h();
  KernelTable t{spec, grid, {}, {}};
  t.avg_.resize(size_t(grid.n));
  t.rmoment_.resize(size_t(grid.n));
  if (spec.family == KernelFamily::SmoothBounded) {
    for (int m = 0; m < grid.n; ++m) {
      t.avg_[size_t(m)] =
          triangle_average(h, m, [&](double r) { return kernel_value_r(spec, r); });
      t.rmoment_[size_t(m)] = triangle_average(h, m, [&](double r) {
        return r == 0.0 ? 0.0 : r * kernel_deriv_r(spec, r);
      });
    }
  } else {
    const double inv_h2 = 1.0 / (h * h);
    for (int m = 0; m < grid.n; ++m) {
      double d = m * h;
      t.avg_[size_t(m)] = (kernel_primitive2(spec, d + h) - 2.0 * kernel_primitive2(spec, d) +
                           kernel_primitive2(spec, d - h)) *
                          inv_h2;
      t.rmoment_[size_t(m)] = (rmoment_primitive2(spec, d + h) - 2.0 * rmoment_primitive2(spec, d) +
                               rmoment_primitive2(spec, d - h)) *
                              inv_h2;
    }
  }
  return t;
}

GridField convolve_signed(const KernelTable& t, const std::vector<double>& vals) {
  const int n = t.grid.n;
  if (int(vals.size()) != n) throw std::invalid_argument("convolve_signed: size mismatch");
  GridField out{t.grid, std::vector<double>(size_t(n), 0.0)};
  const double h = t.grid.h();
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int l = 0; l < n; ++l) acc += t.avg(std::abs(k - l)) * vals[size_t(l)];
    out[k] = acc * h;
  }
  return out;
}

GridField convolve_kernel(const KernelTable& t, const GridDensity& mu) {
  if (!(mu.grid == t.grid)) throw std::invalid_argument("convolve: grid mismatch");
  return convolve_signed(t, mu.values);
}

GridField convolve_kernel(const KernelSpec& spec, const GridDensity& mu) {
  return convolve_kernel(KernelTable::build(spec, mu.grid), mu);
}

double convolve_at(const KernelSpec& spec, const GridDensity& mu, double x) {
  require_convolvable(spec);
  const double h = mu.grid.h();
  double acc = 0.0;
  if (spec.family == KernelFamily::SmoothBounded) {
    // 2-point Gauss per cell; smooth integrand
    const double o = 0.5 / std::sqrt(3.0);
    for (int l = 0; l < mu.n(); ++l) {
      double c = mu.grid.center(l);
      acc += 0.5 * mu[l] * h *
             (kernel_value_r(spec, x - (c - o * h)) + kernel_value_r(spec, x - (c + o * h)));
    }
    return acc;
  }
  for (int l = 0; l < mu.n(); ++l) {
    double a = mu.grid.left(l);
    acc += mu[l] * (kernel_primitive(spec, x - a) - kernel_primitive(spec, x - a - h));
  }
  return acc;
}

double convolve_deriv_at(const KernelSpec& spec, const GridDensity& mu, double x) {
  require_convolvable(spec);
  const double h = mu.grid.h();
  double acc = 0.0;
  if (spec.family == KernelFamily::SmoothBounded) {
    const double o = 0.5 / std::sqrt(3.0);
    for (int l = 0; l < mu.n(); ++l) {
      double c = mu.grid.center(l);
      double r1 = x - (c - o * h), r2 = x - (c + o * h);
      acc += 0.5 * mu[l] * h *
             ((r1 == 0 ? 0 : kernel_deriv_r(spec, r1)) + (r2 == 0 ? 0 : kernel_deriv_r(spec, r2)));
    }
    return acc;
  }
  for (int l = 0; l < mu.n(); ++l) {
    double a = mu.grid.left(l);
    // d/dx of the primitive difference; values at cell edges are singular but
    // only hit on a measure-zero set of x
    acc += mu[l] * (kernel_value_r(spec, x - a) - kernel_value_r(spec, x - a - h));
  }
  return acc;
}

double double_integral(const KernelTable& t, const GridDensity& mu, const GridDensity& nu) {
  if (!(mu.grid == t.grid) || !(nu.grid == t.grid))
    throw std::invalid_argument("double_integral: grid mismatch");
  const double h = t.grid.h();
  double acc = 0.0;
  for (int k = 0; k < t.grid.n; ++k) {
    double row = 0.0;
    for (int l = 0; l < t.grid.n; ++l) row += t.avg(std::abs(k - l)) * nu[l];
    acc += mu[k] * row;
  }
  return acc * h * h;
}

double double_integral(const KernelSpec& spec, const GridDensity& mu, const GridDensity& nu) {
  return double_integral(KernelTable::build(spec, mu.grid), mu, nu);
}

GridField grad_field(const GridField& f) {
  const int n = f.n();
  const double h = f.grid.h();
  GridField out{f.grid, std::vector<double>(size_t(n), 0.0)};
  for (int k = 1; k + 1 < n; ++k) out[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
  if (n >= 2) {
    out[0] = (f[1] - f[0]) / h;
    out[n - 1] = (f[n - 1] - f[n - 2]) / h;
  }
  return out;
}

GridField log_density(const GridDensity& mu, double floor) {
  GridField out{mu.grid, std::vector<double>(size_t(mu.n()), 0.0)};
  for (int k = 0; k < mu.n(); ++k) out[k] = std::log(std::max(mu[k], floor));
  return out;
}

double entropy(const GridDensity& mu, double floor) {
  double acc = 0.0;
  for (int k = 0; k < mu.n(); ++k)
    if (mu[k] > floor) acc += mu[k] * std::log(mu[k]);
  return acc * mu.grid.h();
}

double c2_seminorm(const GridField& f) {
  const int n = f.n();
  if (n < 64) std::fprintf(stderr, "warning: c2_seminorm on a coarse grid (n=%d < 64)\n", n);
  const double inv_h2 = 1.0 / (f.grid.h() * f.grid.h());
  double best = 0.0;
  for (int k = 1; k + 1 < n; ++k)
    best = std::max(best, std::abs(f[k + 1] - 2.0 * f[k] + f[k - 1]) * inv_h2);
  return best;
}

void write_field_csv(const GridField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "x,value\n";
  out.precision(17);
  for (int k = 0; k < f.n(); ++k) out << f.grid.center(k) << ',' << f[k] << '\n';
}

void write_density_csv(const GridDensity& mu, const std::string& path) {
  write_field_csv(GridField{mu.grid, mu.values}, path);
}

GridDensity read_density_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> xs, vs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double x, v;
    char comma;
    if (!(ss >> x >> comma >> v)) throw std::runtime_error("bad csv row in " + path);
    xs.push_back(x);
    vs.push_back(v);
  }
  if (xs.size() < 16) throw std::runtime_error("csv density too short: " + path);
  const int n = int(xs.size());
  const double h = xs[1] - xs[0];
  Grid1D g{xs[0] - 0.5 * h, xs[size_t(n - 1)] + 0.5 * h, n};
  return GridDensity::from_values(g, std::move(vs));
}

void write_density_binary(const GridDensity& mu, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const char magic[8] = {'C', 'L', 'D', 'E', 'N', 'S', '0', '1'};
  out.write(magic, 8);
  int64_t n = mu.n();
  out.write(reinterpret_cast<const char*>(&mu.grid.lo), 8);
  out.write(reinterpret_cast<const char*>(&mu.grid.hi), 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(mu.values.data()), std::streamsize(8 * mu.values.size()));
}

GridDensity read_density_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != "CLDENS01") throw std::runtime_error("bad density snapshot magic");
  double lo, hi;
  int64_t n;
  in.read(reinterpret_cast<char*>(&lo), 8);
  in.read(reinterpret_cast<char*>(&hi), 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  std::vector<double> vals(size_t(n), 0.0);
  in.read(reinterpret_cast<char*>(vals.data()), std::streamsize(8 * vals.size()));
  if (!in) throw std::runtime_error("truncated density snapshot");
  return GridDensity{Grid1D{lo, hi, int(n)}, std::move(vals)};
}

}  // namespace chaoslab
