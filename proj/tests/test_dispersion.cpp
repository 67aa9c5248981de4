#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "f4nls/analysis.hpp"
#include "f4nls/dispersion.hpp"
#include "support.hpp"

using namespace f4nls;
using Catch::Approx;
using testing_support::random_field;
using testing_support::rel_diff;

namespace {

double symbol(std::vector<double> xi, const DispersionParams& p) { return dispersion_symbol(xi, p); }

DispersionParams iso(double eps, double delta) { return {eps, delta, Variant::isotropic, 0}; }
DispersionParams aniso(double eps, double delta, int d) { return {eps, delta, Variant::anisotropic, d}; }

}  // namespace

TEST_CASE("dispersion symbol examples") {
  CHECK(symbol({0.0, 0.0}, iso(1.0, 1.0)) == 0.0);
  CHECK(symbol({1.0, 0.0}, iso(1.0, 1.0)) == 0.0);
  CHECK(symbol({2.0, 3.0}, aniso(0.0, 1.0, 1)) == -16.0);
  CHECK(symbol({1.0, 2.0}, iso(0.5, -1.0)) == Approx(0.5 * 5 + 25));
}

TEST_CASE("symbol symmetries") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xi{u(rng), u(rng), u(rng)};
    const auto p = iso(0.3, 1.0);
    const double a = symbol(xi, p);
    CHECK(symbol({-xi[0], -xi[1], -xi[2]}, p) == a);
    std::vector<double> perm = xi;
    std::sort(perm.begin(), perm.end());
    do {
      CHECK(symbol(perm, p) == Approx(a).epsilon(1e-14));
    } while (std::next_permutation(perm.begin(), perm.end()));

    const auto q = aniso(-0.7, -1.0, 2);
    const double b = symbol(xi, q);
    CHECK(symbol({xi[1], xi[0], xi[2]}, q) == Approx(b).epsilon(1e-14));
    const auto q1 = aniso(0.2, 1.0, 1);
    CHECK(symbol({xi[0], xi[2], xi[1]}, q1) == Approx(symbol(xi, q1)).epsilon(1e-14));
  }
}

TEST_CASE("anisotropic split must fit the grid") {
  const GridSpec g = make_grid(2, {16, 16}, {1.0, 1.0});
  const ComplexField u = random_field(g, 1);
  CHECK_THROWS_AS(apply_free_group(u, 1.0, aniso(0.0, 1.0, 2)), DomainError);
  CHECK_THROWS_AS(apply_free_group(u, 1.0, aniso(0.0, 1.0, 0)), DomainError);
  CHECK_THROWS_AS(apply_free_group(u, 1.0, iso(0.0, 2.0)), DomainError);
  CHECK_NOTHROW(apply_free_group(u, 1.0, aniso(0.0, 1.0, 1)));
}

TEST_CASE("G(0) is the identity and plane waves are eigenfunctions") {
  const GridSpec g = make_grid(2, {32, 32}, {4.0, 4.0});
  const ComplexField u = random_field(g, 9);
  CHECK(rel_diff(apply_free_group(u, 0.0, iso(1.0, 1.0)), u) == 0.0);
  const double kx = g.wavenumbers(0)[3], ky = g.wavenumbers(1)[30];
  const ComplexField w = sample_function(g, [&](const Point& x) { return std::polar(1.0, kx * x[0] + ky * x[1]); });
  const auto p = iso(0.4, -1.0);
  const double t = 0.37;
  const std::vector<double> k{kx, ky};
  const Complex factor = std::polar(1.0, -t * dispersion_symbol(k, p));
  const ComplexField out = apply_free_group(w, t, p);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(out[i] - factor * w[i]) < 1e-12);
}

TEST_CASE("unitarity, group law and inverse on random fields") {
  // Phase rounding is about 1e-16 * |t a(xi)|, so the boxes keep |xi| <= pi.
  const GridSpec g1 = make_grid(1, {128}, {64.0});
  const GridSpec g2 = make_grid(2, {32, 32}, {16.0, 16.0});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> tt(-3.0, 3.0), ee(-1.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const bool two = trial % 2;
    const GridSpec& g = two ? g2 : g1;
    const DispersionParams p = two && trial % 4 == 1 ? aniso(ee(rng), 1.0, 1) : iso(ee(rng), trial % 3 ? 1.0 : -1.0);
    const ComplexField u = random_field(g, 100 + trial);
    const double t = tt(rng), s = tt(rng);
    const ComplexField gt = apply_free_group(u, t, p);
    CHECK(std::abs(l2_norm(gt) - l2_norm(u)) <= 1e-12 * l2_norm(u));
    CHECK(rel_diff(apply_free_group(apply_free_group(u, s, p), t, p), apply_free_group(u, t + s, p)) < 1e-12);
    CHECK(rel_diff(apply_free_group(gt, -t, p), u) < 1e-12);
  }
}

TEST_CASE("group difference matches the difference of groups") {
  const GridSpec g = make_grid(2, {32, 32}, {5.0, 5.0});
  for (int trial = 0; trial < 10; ++trial) {
    const ComplexField u = random_field(g, 300 + trial);
    const DispersionParams p = trial % 2 ? iso(0.1 * trial, 1.0) : aniso(-0.05 * trial, -1.0, 1);
    const double t = 0.3 + 0.1 * trial;
    const ComplexField ref = apply_free_group(u, t, p) - apply_free_group(u, t, p.with_epsilon(0.0));
    const ComplexField got = group_difference(u, t, p);
    CHECK(rel_diff(got, ref) < 1e-12);
  }
  const ComplexField u = random_field(g, 1);
  CHECK(l2_norm(group_difference(u, 0.7, iso(0.0, 1.0))) == 0.0);
  CHECK(l2_norm(group_difference(u, 0.0, iso(0.3, 1.0))) == 0.0);
}

TEST_CASE("group difference H2 bound for a Gaussian") {
  const GridSpec g = make_grid(1, {512}, {20.0});
  const ComplexField u0 = sample_function(g, [](const Point& x) { return Complex(std::exp(-x[0] * x[0])); });
  const double t = 0.5, eps = 0.1;
  const ComplexField out = group_difference(u0, t, iso(eps, 1.0));
  // |exp(-i t eps xi^2) - 1| <= t eps xi^2, summed directly on the Fourier side.
  const ComplexField s = to_spectral(u0);
  double bound2 = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double k = g.wavenumbers(0)[i];
    bound2 += std::pow(1 + k * k, 2) * std::pow(t * eps * k * k, 2) * std::norm(s[i]);
  }
  const double bound = std::sqrt(g.cell_volume() * bound2);
  const double got = sobolev_norm(out, 2.0);
  CHECK(got > 0.0);
  CHECK(got <= bound);
  CHECK(got >= 0.9 * bound);  // small-angle regime: the bound is nearly attained
}

TEST_CASE("free evolution agrees with the Fourier series of the periodized Gaussian") {
  // Coefficients of the periodized exp(-x^2) are sqrt(pi) exp(-k^2/4) / (2L), summed directly.
  const double L = 200.0;
  const GridSpec g = make_grid(1, {4096}, {L});
  const ComplexField u0 = sample_function(g, [](const Point& x) { return Complex(std::exp(-x[0] * x[0])); });
  const auto p = iso(0.0, 1.0);
  for (double t : {1.0, 4.0, 10.0}) {
    const ComplexField ut = apply_free_group(u0, t, p);
    for (double target : {0.0, 1.5, 5.0, -37.5}) {
      const std::size_t j = static_cast<std::size_t>(std::lround((target + L) / g.spacing(0)));
      const double x = g.coordinate(j)[0];
      Complex acc = 0.0;
      for (int m = -1000; m <= 1000; ++m) {
        const double k = std::numbers::pi / L * m;
        acc += std::polar(std::exp(-k * k / 4.0), k * x + t * k * k * k * k);
      }
      const Complex oracle = acc * std::sqrt(std::numbers::pi) / (2.0 * L);
      CHECK(std::abs(ut[j] - oracle) < 1e-12);
    }
  }
}

TEST_CASE("free evolution approximates the whole-line kernel before wrap-around") {
  // u(x,t) = (1/2pi) int exp(i x xi + i t xi^4) sqrt(pi) exp(-xi^2/4) dxi, trapezoidal rule.
  const double L = 800.0;
  const GridSpec g = make_grid(1, {16384}, {L});
  const ComplexField u0 = sample_function(g, [](const Point& x) { return Complex(std::exp(-x[0] * x[0])); });
  const double t = 1.0;
  const ComplexField ut = apply_free_group(u0, t, iso(0.0, 1.0));
  for (double target : {0.0, 2.0}) {
    const std::size_t j = static_cast<std::size_t>(std::lround((target + L) / g.spacing(0)));
    const double x = g.coordinate(j)[0];
    const int m = 2000000;
    const double xmax = 11.0, h = 2 * xmax / m;
    Complex acc = 0.0;
    for (int i = 0; i <= m; ++i) {
      const double xi = -xmax + i * h;
      const double w = (i == 0 || i == m) ? 0.5 : 1.0;
      acc += w * std::polar(std::exp(-xi * xi / 4.0), x * xi + t * xi * xi * xi * xi);
    }
    const Complex oracle = acc * h * std::sqrt(std::numbers::pi) / (2 * std::numbers::pi);
    CHECK(std::abs(ut[j] - oracle) < 1e-3);
  }
}

TEST_CASE("scale transform") {
  const SpaceTimeFn u = [](const Point& x, double t) {
    return std::exp(-x[0] * x[0] - 0.5 * x[1] * x[1]) * std::polar(1.0 + t, 0.3 * x[0] - t);
  };
  const double alpha = 2.0;
  const auto id = scale_transform(u, 1.0, alpha);
  const auto s23 = scale_transform(scale_transform(u, 2.0, alpha), 3.0, alpha);
  const auto s6 = scale_transform(u, 6.0, alpha);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Point x{d(rng), d(rng), 0.0};
    const double t = 0.01 * std::abs(d(rng));
    CHECK(id(x, t) == u(x, t));
    CHECK(std::abs(s23(x, t) - s6(x, t)) <= 1e-12 * std::abs(s6(x, t)) + 1e-300);
  }
  const SpaceTimeFn hom = [alpha](const Point& x, double) { return Complex(std::pow(radius(x), -4.0 / alpha)); };
  const auto hs = scale_transform(hom, 1.7, alpha);
  for (int i = 0; i < 50; ++i) {
    const Point x{d(rng), d(rng), d(rng)};
    CHECK(hs(x, 0.0).real() == Approx(hom(x, 0.0).real()).epsilon(1e-13));
  }
  CHECK_THROWS_AS(scale_transform(u, 0.0, alpha), DomainError);
  CHECK_THROWS_AS(scale_transform(u, -1.0, alpha), DomainError);
}

TEST_CASE("rescale_field maps a plane wave to the dilated wave") {
  const GridSpec g = make_grid(2, {32, 64}, {4.0, 8.0});
  const double kx = g.wavenumbers(0)[2], ky = g.wavenumbers(1)[61];
  const ComplexField w = sample_function(g, [&](const Point& x) { return std::polar(1.0, kx * x[0] + ky * x[1]); });
  const double lam = 1.37;
  const ComplexField r = rescale_field(w, lam);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Point x = g.coordinate(i);
    CHECK(std::abs(r[i] - std::polar(1.0, lam * (kx * x[0] + ky * x[1]))) < 1e-12);
  }
  RescaleOptions opts;
  opts.band_limit = 1.0;
  opts.window = 2.0;
  const ComplexField cut = rescale_field(w, lam, opts);
  for (std::size_t i = 0; i < cut.size(); ++i) CHECK(std::abs(cut[i]) < 1e-15);
}
