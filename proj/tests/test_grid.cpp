#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "chaoslab/grid.hpp"

using namespace chaoslab;

namespace {
GridDensity uniform_on(double lo, double hi, int n, double glo, double ghi) {
  Grid1D g{glo, ghi, n};
  return GridDensity::from_function(g, [&](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}
}  // namespace

TEST_CASE("log-kernel convolution of the uniform density: closed form") {
  // (-log * unif[0,1])(0.5) = integral_0^1 -log|0.5-y| dy = 1 + log 2
  auto spec = KernelSpec::log_kernel();
  Grid1D g{0.0, 1.0, 512};
  GridDensity mu = GridDensity::from_function(g, [](double) { return 1.0; });
  GridField conv = convolve_kernel(spec, mu);
  CHECK(conv[g.n / 2 - 1] == doctest::Approx(1.0 + std::log(2.0)).epsilon(1e-5));
  // far-field: a single occupied cell at distance r >> h looks like -log r
  GridDensity spike = uniform_on(0.0, 1.0 / 512, 512, 0.0, 1.0);
  double x = 0.75, r = x - 0.5 / 512;
  CHECK(convolve_at(spec, spike, x) == doctest::Approx(-std::log(r)).epsilon(1e-5));
}

TEST_CASE("constant kernel convolves to the constant") {
  auto c = KernelSpec::smooth(SmoothTable::Constant, 1, 2.5);
  Grid1D g{-1.0, 1.0, 64};
  GridDensity mu = GridDensity::from_function(g, [](double x) { return std::exp(-x * x); });
  GridField conv = convolve_kernel(c, mu);
  for (int k = 0; k < g.n; ++k) CHECK(conv[k] == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("double integral of -log over the unit square is 3/2") {
  auto spec = KernelSpec::log_kernel();
  Grid1D g{0.0, 1.0, 256};
  GridDensity mu = GridDensity::from_function(g, [](double) { return 1.0; });
  CHECK(double_integral(spec, mu, mu) == doctest::Approx(1.5).epsilon(1e-10));
  // symmetry in the two arguments
  GridDensity nu = GridDensity::from_function(g, [](double x) { return 1.0 + x; });
  CHECK(double_integral(spec, mu, nu) == doctest::Approx(double_integral(spec, nu, mu)));
  // nonnegativity on a diameter < 1 support (there -log|x-y| > 0)
  CHECK(double_integral(spec, nu, nu) >= 0.0);
}

TEST_CASE("convolution is linear in the density") {
  auto spec = KernelSpec::log_kernel();
  Grid1D g{-1.0, 1.0, 128};
  GridDensity m1 = GridDensity::from_function(g, [](double x) { return std::exp(-2 * x * x); });
  GridDensity m2 = GridDensity::from_function(g, [](double x) { return 1.0 + 0.5 * x; });
  auto table = KernelTable::build(spec, g);
  std::vector<double> combo(size_t(g.n));
  for (int k = 0; k < g.n; ++k) combo[size_t(k)] = 0.3 * m1[k] + 0.7 * m2[k];
  GridField lhs = convolve_signed(table, combo);
  GridField c1 = convolve_kernel(table, m1), c2 = convolve_kernel(table, m2);
  for (int k = 0; k < g.n; ++k)
    CHECK(std::abs(lhs[k] - (0.3 * c1[k] + 0.7 * c2[k])) <= 1e-12 * (1.0 + std::abs(lhs[k])));
}

TEST_CASE("grid refinement converges at order >= 1.8 on a smooth density") {
  auto spec = KernelSpec::log_kernel();
  auto value_at_zero = [&](int n) {
    Grid1D g{-2.0, 2.0, n};
    GridDensity mu = GridDensity::from_function(g, [](double x) { return std::exp(-x * x); });
    return convolve_at(spec, mu, 0.0);
  };
  double v1 = value_at_zero(64), v2 = value_at_zero(128), v4 = value_at_zero(256);
  double order = std::log2(std::abs(v1 - v2) / std::abs(v2 - v4));
  CHECK(order >= 1.8);
}

TEST_CASE("entropy closed forms") {
  Grid1D g{0.0, 2.0, 128};
  GridDensity u01 = uniform_on(0.0, 1.0, 128, 0.0, 2.0);
  CHECK(entropy(u01) == doctest::Approx(0.0));
  GridDensity u02 = GridDensity::from_function(g, [](double) { return 1.0; });
  CHECK(entropy(u02) == doctest::Approx(-std::log(2.0)));
  // gaussian: integral mu log mu = -(1/2) log(2 pi e sigma^2)
  double sigma = 0.5;
  Grid1D gg{-4.0, 4.0, 1024};
  GridDensity gauss =
      GridDensity::from_function(gg, [&](double x) { return std::exp(-x * x / (2 * sigma * sigma)); });
  double expect = -0.5 * std::log(2 * std::numbers::pi * std::numbers::e * sigma * sigma);
  CHECK(entropy(gauss) == doctest::Approx(expect).epsilon(1e-4));
}

TEST_CASE("c2 seminorm closed forms") {
  Grid1D g{-1.0, 1.0, 128};
  GridField lin{g, {}};
  lin.values.resize(size_t(g.n));
  for (int k = 0; k < g.n; ++k) lin[k] = 2.0 + 3.0 * g.center(k);
  CHECK(c2_seminorm(lin) == doctest::Approx(0.0));
  GridField quad = lin;
  for (int k = 0; k < g.n; ++k) quad[k] = 0.5 * g.center(k) * g.center(k);
  CHECK(c2_seminorm(quad) == doctest::Approx(1.0).epsilon(1e-8));
  Grid1D gs{-std::numbers::pi, std::numbers::pi, 1024};
  GridField sinf{gs, {}};
  sinf.values.resize(size_t(gs.n));
  for (int k = 0; k < gs.n; ++k) sinf[k] = std::sin(gs.center(k));
  CHECK(c2_seminorm(sinf) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("density invariants and serialization round trip") {
  Grid1D g{-1.0, 1.0, 64};
  GridDensity mu = GridDensity::from_function(g, [](double x) { return 1.0 + 0.3 * std::sin(3 * x); });
  CHECK(std::abs(mu.mass() - 1.0) <= 1e-12);
  std::string path = "test_grid_roundtrip.csv";
  write_density_csv(mu, path);
  GridDensity back = read_density_csv(path);
  REQUIRE(back.n() == mu.n());
  for (int k = 0; k < g.n; ++k) CHECK(back[k] == doctest::Approx(mu[k]).epsilon(1e-14));
  std::string bpath = "test_grid_roundtrip.bin";
  write_density_binary(mu, bpath);
  GridDensity bin = read_density_binary(bpath);
  REQUIRE(bin.grid == mu.grid);
  for (int k = 0; k < g.n; ++k) CHECK(bin[k] == mu[k]);
  std::remove(path.c_str());
  std::remove(bpath.c_str());
}

TEST_CASE("riesz s >= 1 in d = 1 is rejected by the convolution machinery") {
  CHECK_THROWS(require_convolvable(KernelSpec::riesz(1.5)));
}
