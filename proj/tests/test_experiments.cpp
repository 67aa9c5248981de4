#include <catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "f4nls/experiments.hpp"
#include "support.hpp"

using namespace f4nls;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

InitialSpec gaussian_spec(double amp = 1.0, std::vector<double> coeffs = {}) {
  InitialSpec s;
  s.kind = InitialSpec::Kind::gaussian;
  s.amplitude = amp;
  s.coefficients = std::move(coeffs);
  return s;
}

const Verdict& verdict(const ExperimentReport& r, const std::string& prefix) {
  for (const auto& v : r.verdicts)
    if (v.criterion.rfind(prefix, 0) == 0) return v;
  FAIL("no verdict starting with " << prefix);
  return r.verdicts.front();
}

const NormSeries& series(const ExperimentReport& r, const std::string& kind) {
  for (const auto& s : r.series)
    if (s.kind == kind) return s;
  FAIL("no series " << kind);
  return r.series.front();
}

EvolveConfig linear_config(double lambda, double dt, double t_end) {
  EvolveConfig c;
  c.dispersion = {0.0, 1.0, Variant::isotropic, 0};
  c.nonlinearity.lambda = lambda;
  c.nonlinearity.alpha = 2.0;
  c.dt = dt;
  c.t_end = t_end;
  return c;
}

}  // namespace

TEST_CASE("initial data realizations") {
  const GridSpec g = make_grid(2, {32, 16}, {4.0, 2.0});
  SECTION("gaussian with per-axis coefficients") {
    const ComplexField u = realize(gaussian_spec(2.0, {0.5, 3.0}), g);
    for (std::size_t i = 0; i < g.size(); i += 37) {
      const Point x = g.coordinate(i);
      CHECK(u[i].real() == Approx(2.0 * std::exp(-0.5 * x[0] * x[0] - 3.0 * x[1] * x[1])).epsilon(1e-14));
    }
  }
  SECTION("zero") {
    InitialSpec s;
    s.kind = InitialSpec::Kind::zero;
    CHECK(l2_norm(realize(s, g)) == 0.0);
  }
  SECTION("plane wave is a single mode") {
    InitialSpec s;
    s.kind = InitialSpec::Kind::plane_wave;
    s.modes = {3, -2};
    const ComplexField sp = to_spectral(realize(s, g));
    std::size_t big = 0;
    for (std::size_t i = 0; i < sp.size(); ++i)
      if (std::abs(sp[i]) > 1e-9) ++big;
    CHECK(big == 1);
    s.modes = {1};
    CHECK_THROWS_AS(realize(s, g), DomainError);
  }
  SECTION("random data is reproducible and band-limited") {
    InitialSpec s;
    s.kind = InitialSpec::Kind::random;
    s.seed = 42;
    s.band = 3;
    const ComplexField a = realize(s, g), b = realize(s, g);
    CHECK(testing_support::rel_diff(a, b) == 0.0);
    const ComplexField sp = to_spectral(a);
    for (std::size_t i = 0; i < sp.size(); ++i) {
      const MultiIndex m = g.unflatten(i);
      if (std::abs(GridSpec::mode(m[0], 32)) > 3 || std::abs(GridSpec::mode(m[1], 16)) > 3) CHECK(std::abs(sp[i]) < 1e-14);
    }
    s.seed = 43;
    CHECK(testing_support::rel_diff(realize(s, g), a) > 0.1);
  }
  SECTION("homogeneous data is clamped inside the mollification radius") {
    InitialSpec s;
    s.kind = InitialSpec::Kind::homogeneous;
    s.exponent = 1.0;
    const ComplexField u = realize(s, g);
    CHECK(linf_norm(u) == Approx(1.0 / default_mollify_radius(g)));
  }
}

TEST_CASE("decay study: wrap-around guard names the safe horizon") {
  const GridSpec g = make_grid(1, {1024}, {50.0});
  const DispersionParams d{0.0, 1.0, Variant::isotropic, 0};
  const double tw = wrap_time(realize(gaussian_spec(), g), d, 0.5);
  CHECK(tw > 0.0);
  CHECK_THROWS_WITH(decay_study(gaussian_spec(), g, d, {1.0}, 1.0, 2.0 * tw),
                    ContainsSubstring("safe horizon") && ContainsSubstring(format_double(tw)));
  CHECK_THROWS_AS(decay_study(gaussian_spec(), g, d, {2.5}, 1.0, 2.0), DomainError);
  CHECK_THROWS_AS(decay_study(gaussian_spec(), g, d, {1.0}, 2.0, 1.0), DomainError);
}

TEST_CASE("decay study on a small box reproduces the L-infinity rate") {
  const GridSpec g = make_grid(1, {1024}, {60.0});
  const DispersionParams d{0.0, 1.0, Variant::isotropic, 0};
  const ExperimentReport r = decay_study(gaussian_spec(), g, d, {1.0, 2.0}, 1.0, 5.0);
  CHECK(r.passed());
  CHECK(verdict(r, "decay slope p=1").measured == Approx(-0.25).margin(0.05));
  // p = 2: unitarity, the L2 norm is flat.
  CHECK(std::abs(verdict(r, "decay bound p=2").measured) < 1e-12);
  CHECK(series(r, "linf").size() == 20);
  const ExperimentReport again = decay_study(gaussian_spec(), g, d, {1.0, 2.0}, 1.0, 5.0);
  CHECK(again.series.front().values == r.series.front().values);
}

TEST_CASE("synthetic self-similar family") {
  const double alpha = 2.0;
  const SpaceTimeFn u = [alpha](const Point& x, double t) {
    const double s = std::pow(t, -0.25);
    const double y = x[0] * s;
    return std::pow(t, -1.0 / alpha) * Complex(1.0, 0.5 * y) * std::exp(-y * y);
  };
  const GridSpec g = make_grid(1, {256}, {8.0});
  const ExperimentReport r = synthetic_self_similarity(alpha, u, g, {1.0, 1.1, 1.25, 1.5}, {0.5, 1.0, 2.0});
  CHECK(r.passed());
  CHECK(series(r, "residual_lambda_1").values == std::vector<double>(3, 0.0));
  for (const auto& s : r.series)
    for (double v : s.values) CHECK(v < 1e-12);
  // A family with the wrong time exponent is caught.
  const SpaceTimeFn w = [](const Point& x, double t) { return std::pow(t, -0.3) * std::exp(-x[0] * x[0] / std::sqrt(t)); };
  CHECK_FALSE(synthetic_self_similarity(alpha, w, g, {1.5}, {1.0}).passed());
}

TEST_CASE("self-similarity study preconditions") {
  SelfSimOptions o;
  o.epsilon = 0.5;
  CHECK_THROWS_WITH(self_similarity_study(2.0, o, {1.0}, {0.1}), ContainsSubstring("epsilon = 0"));
  o.epsilon = 0.0;
  // alpha = 1: (alpha + 1) sigma = 2 (1 - 3/12) = 1.5.
  CHECK_THROWS_WITH(self_similarity_study(1.0, o, {1.0}, {0.1}), ContainsSubstring("(alpha + 1) sigma"));
  CHECK_THROWS_AS(self_similarity_study(2.0, o, {-1.0}, {0.1}), DomainError);
}

TEST_CASE("self-similarity study: lambda = 1 gives zero residual") {
  SelfSimOptions o;
  o.points = 1024;
  o.half_width = 32.0;
  const ExperimentReport r = self_similarity_study(2.0, o, {1.0}, {0.02});
  REQUIRE(r.series.size() == 1);
  CHECK(r.series[0].values[0] == 0.0);
  CHECK(r.passed());
}

TEST_CASE("picard certification") {
  const GridSpec g = make_grid(1, {128}, {16.0});
  PicardConfig pc;
  pc.nonlinearity.lambda = 1.0;
  pc.nonlinearity.alpha = 2.0;
  pc.quad_nodes = 16;
  SECTION("zero data passes trivially") {
    InitialSpec z;
    z.kind = InitialSpec::Kind::zero;
    const ExperimentReport r = picard_certify(z, g, pc);
    CHECK(r.passed());
  }
  SECTION("region apex Q0 is rejected with the region rule") {
    pc.p = 1.0;  // (1, 1/3)
    CHECK_THROWS_WITH(picard_certify(gaussian_spec(0.05), g, pc), ContainsSubstring("R0 P0 B Q0"));
  }
  SECTION("boundary point 3x + y = 2 is rejected") {
    pc.p = 5.0 / 3.0;
    CHECK_THROWS_WITH(picard_certify(gaussian_spec(0.05), g, pc), ContainsSubstring("boundary"));
  }
  SECTION("large data reports divergence as a failed verdict") {
    const ExperimentReport r = picard_certify(gaussian_spec(6.0), g, pc);
    CHECK_FALSE(r.passed());
    CHECK_FALSE(verdict(r, "Picard iteration does not diverge").pass);
  }
}

TEST_CASE("eps-limit preconditions name the hypothesis") {
  const DispersionParams d{0.0, 1.0, Variant::isotropic, 0};
  NonlinearityParams nl;
  nl.lambda = 1.0;
  nl.alpha = 3.0;
  CHECK_THROWS_WITH(eps_limit_preconditions(1, d, nl, EpsMode::h2, {}),
                    ContainsSubstring("α must be a positive even integer"));
  nl.alpha = 4.0;
  CHECK_NOTHROW(eps_limit_preconditions(3, d, nl, EpsMode::h2, {}));
  nl.lambda = -1.0;  // delta lambda < 0, n alpha = 12
  CHECK_THROWS_WITH(eps_limit_preconditions(3, d, nl, EpsMode::h2, {}), ContainsSubstring("n alpha < 8"));
  nl.alpha = 2.0;  // n = 2: 4 / 16 < 1
  CHECK_NOTHROW(eps_limit_preconditions(2, d, nl, EpsMode::h2, {}));
  const DispersionParams an{0.0, 1.0, Variant::anisotropic, 1};
  CHECK_THROWS_WITH(eps_limit_preconditions(2, an, nl, EpsMode::h2, {}), ContainsSubstring("isotropic"));
  EpsLimitOptions o;
  o.p = 1.2;
  o.r = 1.0;  // alpha / (1 - beta) > 2
  CHECK_THROWS_WITH(eps_limit_preconditions(1, d, nl, EpsMode::weak, o), ContainsSubstring("r > alpha / (1 - beta)"));
  o.r = 0.0;
  const double r = eps_limit_preconditions(1, d, nl, EpsMode::weak, o);
  const ExponentSet e = exponent_set(1, 0, 2.0, 1.2, Variant::isotropic);
  CHECK(r == Approx(1.0 + 2.0 / (1.0 - e.beta)));
}

TEST_CASE("eps-limit h2, linear: closed-form Fourier oracle and exact zero at eps = 0") {
  const GridSpec g = make_grid(1, {128}, {16.0});
  const DispersionParams d{0.0, 1.0, Variant::isotropic, 0};
  NonlinearityParams nl;
  nl.lambda = 0.0;
  nl.alpha = 2.0;
  const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125, 0.0};
  const double t = 0.5;
  const ExperimentReport r = eps_limit_study(gaussian_spec(), g, d, nl, eps, t, EpsMode::h2);
  const NormSeries& err = series(r, "h2_error_vs_eps");
  REQUIRE(err.size() == eps.size());
  CHECK(err.times.front() == 0.0);
  CHECK(err.values.front() == 0.0);
  const ComplexField u0 = to_spectral(realize(gaussian_spec(), g));
  for (std::size_t j = 1; j < err.size(); ++j) {
    const double e = err.times[j];
    double sum = 0.0;
    for (std::size_t i = 0; i < u0.size(); ++i) {
      const double k = g.wavevector(i)[0];
      const double w = std::pow(1.0 + k * k, 2.0);
      sum += w * std::norm(std::polar(1.0, -t * e * k * k) - 1.0) * std::norm(u0[i]);
    }
    const double oracle = std::sqrt(g.cell_volume() * sum);
    CHECK(std::abs(err.values[j] - oracle) <= 1e-10 * oracle);
  }
  CHECK(verdict(r, "errors strictly decreasing").pass);
}

TEST_CASE("eps-limit h2, nonlinear: monotone with rate near one") {
  const GridSpec g = make_grid(1, {128}, {16.0});
  const DispersionParams d{0.0, 1.0, Variant::isotropic, 0};
  NonlinearityParams nl;
  nl.lambda = -1.0;
  nl.alpha = 2.0;
  const ExperimentReport r =
      eps_limit_study(gaussian_spec(), g, d, nl, {0.1, 0.05, 0.025, 0.0125}, 0.25, EpsMode::h2, {2e-3});
  CHECK(r.passed());
  CHECK(verdict(r, "fitted rate in eps").measured > 0.9);
}

TEST_CASE("radial study") {
  const GridSpec g = make_grid(2, {64, 64}, {16.0, 16.0});
  SECTION("linear radial gaussian stays radial to machine level") {
    const ExperimentReport r = radial_study(gaussian_spec(1.0, {0.25, 0.25}), g, linear_config(0.0, 5e-3, 0.05));
    CHECK(r.passed());
    CHECK(verdict(r, "ring angular variance").measured < 1e-14);
  }
  SECTION("non-radial data fails") {
    const ExperimentReport r = radial_study(gaussian_spec(1.0, {0.25, 0.1}), g, linear_config(0.0, 1e-2, 0.1));
    CHECK_FALSE(r.passed());
  }
  SECTION("needs a square 2D grid") {
    CHECK_THROWS_AS(radial_study(gaussian_spec(), make_grid(1, {64}, {8.0}), linear_config(0.0, 1e-2, 0.1)),
                    DomainError);
    CHECK_THROWS_AS(radial_study(gaussian_spec(), make_grid(2, {64, 32}, {8.0, 8.0}), linear_config(0.0, 1e-2, 0.1)),
                    DomainError);
  }
}

TEST_CASE("ring variance oracle") {
  const GridSpec g = make_grid(2, {32, 32}, {4.0, 4.0});
  // |u| = 1 + x: on the ring r^2 = 1 (4 points at distance h) the values are 1 +- h and 1 (twice).
  const ComplexField u = sample_function(g, [](const Point& x) { return Complex(1.0 + x[0]); });
  const double h = g.spacing(0);
  const double v = ring_variance(u, 0.5);
  CHECK(v >= 0.5 * h * h * (1.0 - 1e-12));
}

TEST_CASE("split-step convergence study on smooth data") {
  const GridSpec g = make_grid(1, {256}, {16.0});
  EvolveConfig c = linear_config(1.0, 0.0, 0.5);
  c.dispersion = {1.0, -1.0, Variant::isotropic, 0};
  ConvergenceOptions o;
  o.mass_steps = 200;
  const ExperimentReport r = convergence_study(gaussian_spec(1.0, {0.25}), g, c, {0.01, 0.005, 0.0025}, o);
  for (const auto& v : r.verdicts) {
    INFO(v.criterion << " measured " << v.measured);
    CHECK(v.pass);
  }
}

TEST_CASE("evolve run records metrics and snapshots at the stride") {
  const GridSpec g = make_grid(1, {128}, {16.0});
  const ExperimentReport r = evolve_run(gaussian_spec(), g, linear_config(0.0, 1e-2, 0.1), {2.0});
  REQUIRE(r.metrics.size() == 11);
  CHECK(r.snapshots.size() == 11);
  CHECK(r.metrics.back().t == Approx(0.1));
  CHECK(r.metrics.front().mass == Approx(r.metrics.back().mass).epsilon(1e-13));
  CHECK(r.passed());
}

TEST_CASE("sweeps give the same report for any thread count") {
  const GridSpec g = make_grid(1, {128}, {16.0});
  const DispersionParams d{0.0, 1.0, Variant::isotropic, 0};
  NonlinearityParams nl;
  nl.lambda = 1.0;
  nl.alpha = 2.0;
  set_thread_count(1);
  const auto a = eps_limit_study(gaussian_spec(), g, d, nl, {0.1, 0.05}, 0.1, EpsMode::h2, {1e-2});
  set_thread_count(4);
  const auto b = eps_limit_study(gaussian_spec(), g, d, nl, {0.1, 0.05}, 0.1, EpsMode::h2, {1e-2});
  set_thread_count(1);
  CHECK(a.series.front().values == b.series.front().values);
}

TEST_CASE("norm inventory checks the weak-star sandwich") {
  const GridSpec g = make_grid(2, {64, 64}, {4.0, 4.0});
  InitialSpec s;
  s.kind = InitialSpec::Kind::homogeneous;
  s.exponent = 1.0;
  const DispersionParams d{0.0, 1.0, Variant::isotropic, 0};
  NonlinearityParams nl;
  const ExperimentReport r = norms_run(s, g, d, nl, {1.5, 2.0, 3.0});
  CHECK(r.passed());
  CHECK(r.metrics.size() == 1);
}
