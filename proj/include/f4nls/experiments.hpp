#pragma once

// Experiment harnesses. Each study is a pure function of its inputs and
// returns an ExperimentReport with series, fits and pass/fail verdicts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "f4nls/analysis.hpp"
#include "f4nls/dispersion.hpp"
#include "f4nls/error.hpp"
#include "f4nls/grid.hpp"
#include "f4nls/integrators.hpp"
#include "f4nls/nonlinearity.hpp"
#include "f4nls/parallel.hpp"

namespace f4nls {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Short decimal label for file and series names (2 -> "2", 1.2 -> "1.2").
inline std::string label(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Initial data

struct InitialSpec {
  enum class Kind { zero, gaussian, homogeneous, plane_wave, random };
  Kind kind = Kind::gaussian;
  double amplitude = 1.0;
  /// Gaussian: amplitude * exp(-sum_j c_j x_j^2); missing entries default to 1.
  std::vector<double> coefficients;
  /// Homogeneous: amplitude * |x|^{-exponent}, clamped inside mollify_radius.
  double exponent = 2.0;
  double mollify_radius = 0.0;  ///< zero means two grid spacings
  /// Plane wave: integer modes per axis.
  std::vector<int> modes;
  /// Random: complex normal samples, optionally band-limited to |m| <= band.
  std::uint64_t seed = 0;
  int band = 0;
};

inline const char* to_string(InitialSpec::Kind k) {
  switch (k) {
    case InitialSpec::Kind::zero: return "zero";
    case InitialSpec::Kind::gaussian: return "gaussian";
    case InitialSpec::Kind::homogeneous: return "homogeneous";
    case InitialSpec::Kind::plane_wave: return "plane_wave";
    default: return "random";
  }
}

inline ComplexField realize(const InitialSpec& s, const GridSpec& g) {
  using K = InitialSpec::Kind;
  const int n = g.ndim();
  switch (s.kind) {
    case K::zero: return ComplexField(g, Space::physical);
    case K::gaussian: {
      std::vector<double> c(n, 1.0);
      for (int a = 0; a < n && a < static_cast<int>(s.coefficients.size()); ++a) c[a] = s.coefficients[a];
      return sample_function(g, [&](const Point& x) {
        double e = 0.0;
        for (int a = 0; a < n; ++a) e += c[a] * x[a] * x[a];
        return Complex(s.amplitude * std::exp(-e));
      });
    }
    case K::homogeneous: {
      const double r0 = s.mollify_radius > 0.0 ? s.mollify_radius : default_mollify_radius(g);
      return sample_function(
          g, [&](const Point& x) { return Complex(s.amplitude * std::pow(radius(x), -s.exponent)); }, {r0});
    }
    case K::plane_wave: {
      if (static_cast<int>(s.modes.size()) != n) throw DomainError("plane_wave: need one mode per axis");
      return sample_function(g, [&](const Point& x) {
        double ph = 0.0;
        for (int a = 0; a < n; ++a) ph += std::numbers::pi / g.half_width(a) * s.modes[a] * x[a];
        return std::polar(s.amplitude, ph);
      });
    }
    case K::random: {
      std::mt19937_64 rng(s.seed);
      std::normal_distribution<double> nd(0.0, 1.0);
      ComplexField u(g, Space::physical);
      for (auto& z : u.samples()) z = s.amplitude * Complex(nd(rng), nd(rng));
      if (s.band <= 0) return u;
      ComplexField sp = to_spectral(u);
      for (std::size_t i = 0; i < sp.size(); ++i) {
        const MultiIndex idx = g.unflatten(i);
        for (int a = 0; a < n; ++a)
          if (std::abs(GridSpec::mode(idx[a], g.points(a))) > s.band) {
            sp[i] = 0.0;
            break;
          }
      }
      return to_physical(sp);
    }
  }
  throw DomainError("realize: unknown initial data kind");
}

// ---------------------------------------------------------------------------
// Reports

struct Verdict {
  std::string criterion;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string relation;  ///< how measured is compared with tolerance, e.g. "<=", "in"
};

struct Fitted {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;
};

struct MetricsRow {
  double t = 0.0, mass = 0.0, energy = 0.0, h2 = 0.0, linf = 0.0, weak_lp = 0.0;
};

struct Snapshot {
  std::string name;
  double t = 0.0;
  ComplexField field;
};

struct ExperimentReport {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<NormSeries> series;
  std::vector<Fitted> fitted;
  std::vector<Verdict> verdicts;
  std::vector<std::pair<std::string, std::string>> provenance;
  double metrics_p = 2.0;
  std::vector<MetricsRow> metrics;
  std::vector<Snapshot> snapshots;

  bool passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  }
  const Verdict* first_failure() const {
    for (const auto& v : verdicts)
      if (!v.pass) return &v;
    return nullptr;
  }
  void echo(std::string key, std::string value) { config.emplace_back(std::move(key), std::move(value)); }
  void echo(std::string key, double value) { config.emplace_back(std::move(key), format_double(value)); }
  void note(std::string key, std::string value) { provenance.emplace_back(std::move(key), std::move(value)); }
  void fit(std::string name, double value, double err = 0.0) { fitted.push_back({std::move(name), value, err}); }

  void check_le(std::string criterion, double measured, double bound) {
    verdicts.push_back({std::move(criterion), measured <= bound, measured, bound, "<="});
  }
  void check_ge(std::string criterion, double measured, double bound) {
    verdicts.push_back({std::move(criterion), measured >= bound, measured, bound, ">="});
  }
  void check_lt(std::string criterion, double measured, double bound) {
    verdicts.push_back({std::move(criterion), measured < bound, measured, bound, "<"});
  }
  void check_near(std::string criterion, double measured, double target, double tol) {
    verdicts.push_back({std::move(criterion) + " (target " + format_double(target) + ")",
                        std::abs(measured - target) <= tol, measured, tol, "+-"});
  }
  void check_flag(std::string criterion, bool ok) {
    verdicts.push_back({std::move(criterion), ok, ok ? 1.0 : 0.0, 1.0, "=="});
  }
};

inline void describe_grid(ExperimentReport& r, const GridSpec& g, const std::string& prefix = "grid") {
  std::string pts, hw;
  for (int a = 0; a < g.ndim(); ++a) {
    pts += (a ? "x" : "") + std::to_string(g.points(a));
    hw += (a ? "," : "") + format_double(g.half_width(a));
  }
  r.note(prefix + ".points", pts);
  r.note(prefix + ".half_width", hw);
}

inline void describe(ExperimentReport& r, const InitialSpec& s) {
  r.echo("initial.kind", to_string(s.kind));
  r.echo("initial.amplitude", s.amplitude);
  if (s.kind == InitialSpec::Kind::homogeneous) r.echo("initial.exponent", s.exponent);
  if (s.kind == InitialSpec::Kind::random) r.echo("initial.seed", std::to_string(s.seed));
  for (std::size_t a = 0; a < s.coefficients.size(); ++a)
    r.echo("initial.coefficients[" + std::to_string(a) + "]", s.coefficients[a]);
}

inline void describe(ExperimentReport& r, const DispersionParams& d) {
  r.echo("dispersion.epsilon", d.epsilon);
  r.echo("dispersion.delta", d.delta);
  r.echo("dispersion.variant", to_string(d.variant));
  if (d.variant == Variant::anisotropic) r.echo("dispersion.d", std::to_string(d.d));
}

inline void describe(ExperimentReport& r, const NonlinearityParams& n) {
  r.echo("nonlinearity.lambda", n.lambda);
  r.echo("nonlinearity.alpha", n.alpha);
  r.echo("nonlinearity.kind", to_string(n.kind));
}

inline MetricsRow metrics_row(const ComplexField& u, double t, const DispersionParams& d, const NonlinearityParams& n,
                              double p) {
  const ConservedQuantities q = conserved_quantities(u, d, n);
  return {t, q.mass, q.energy, sobolev_norm(u, 2.0), linf_norm(u), weak_lp_norm(u, p)};
}

// ---------------------------------------------------------------------------
// Dispersive decay

struct DecayOptions {
  int samples = 20;
  double tolerance = 0.05;
  /// Modes with |u0^| >= band_threshold * max |u0^| set the wrap-around speed.
  double band_threshold = 0.5;
  bool box_doubling = true;
};

/// t_wrap = 2 L_min / max |grad a| over the retained band of u0.
inline double wrap_time(const ComplexField& u0, const DispersionParams& d, double band_threshold) {
  const ComplexField s = to_spectral(u0);
  const GridSpec& g = s.grid();
  double peak = 0.0;
  for (const Complex& z : s.samples()) peak = std::max(peak, std::abs(z));
  double vmax = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (peak == 0.0 || std::abs(s[i]) < band_threshold * peak) continue;
    const Point k = g.wavevector(i);
    vmax = std::max(vmax, group_speed(detail::leading(k, g.ndim()), d));
  }
  double lmin = infinity;
  for (int a = 0; a < g.ndim(); ++a) lmin = std::min(lmin, g.half_width(a));
  return vmax > 0.0 ? 2.0 * lmin / vmax : infinity;
}

namespace detail {

inline double dual_index(double p) { return p == 1.0 ? infinity : p / (p - 1.0); }

inline std::vector<NormSeries> decay_series(const ComplexField& u0, const DispersionParams& d,
                                            const std::vector<double>& p_values, const std::vector<double>& times) {
  const ComplexField s0 = to_spectral(u0);
  const auto fields = parallel_map<ComplexField>(times.size(), [&](std::size_t i) {
    return to_physical(apply_free_group(s0, times[i], d));
  });
  std::vector<NormSeries> out;
  for (double p : p_values) {
    const double q = dual_index(p);
    NormSeries ser;
    ser.kind = std::isinf(q) ? "linf" : "lp_" + label(q);
    for (std::size_t i = 0; i < times.size(); ++i) ser.push(times[i], lp_norm(fields[i], q));
    out.push_back(std::move(ser));
  }
  return out;
}

}  // namespace detail

/// L^{p'} norms of G(t) u0 on a log-spaced window, fitted against -b_g.
/// At p = 1 the slope must match -b_g within the tolerance; for p > 1 the rate
/// is an upper bound and the slope must not exceed -b_g + tolerance.
inline ExperimentReport decay_study(const InitialSpec& spec, const GridSpec& grid, const DispersionParams& disp,
                                    const std::vector<double>& p_values, double t_lo, double t_hi,
                                    const DecayOptions& opts = {}) {
  validate(disp, grid.ndim());
  if (p_values.empty()) throw DomainError("decay_study: no p values");
  for (double p : p_values)
    if (!(p >= 1.0 && p <= 2.0)) throw DomainError("decay_study: p must lie in [1, 2]");
  if (!(t_lo > 0.0 && t_hi > t_lo)) throw DomainError("decay_study: need 0 < t_lo < t_hi");
  ExperimentReport rep;
  rep.kind = "decay";
  describe(rep, spec);
  describe(rep, disp);
  rep.echo("window.t_lo", t_lo);
  rep.echo("window.t_hi", t_hi);
  rep.echo("samples", std::to_string(opts.samples));
  rep.echo("tolerance", opts.tolerance);
  describe_grid(rep, grid);

  const ComplexField u0 = realize(spec, grid);
  const double t_wrap = wrap_time(u0, disp, opts.band_threshold);
  rep.note("t_wrap", format_double(t_wrap));
  if (t_hi > t_wrap)
    throw DomainError("decay_study: window end t = " + format_double(t_hi) +
                      " collides with wrap-around; safe horizon is t < " + format_double(t_wrap));
  rep.check_le("wrap-around guard: t_hi <= t_wrap", t_hi, t_wrap);

  const std::vector<double> times = log_spaced(t_lo, t_hi, opts.samples);
  const auto series = detail::decay_series(u0, disp, p_values, times);
  std::vector<double> slopes;
  for (std::size_t j = 0; j < p_values.size(); ++j) {
    const double p = p_values[j];
    const ExponentSet e = exponent_set(grid.ndim(), disp.d, 2.0, p, disp.variant);
    const DecayFit fit = fit_decay_exponent(series[j], t_lo, t_hi);
    slopes.push_back(fit.slope);
    rep.series.push_back(series[j]);
    rep.fit("slope p=" + label(p), fit.slope, fit.std_error);
    rep.fit("expected slope p=" + label(p), -e.b_g);
    if (p == 1.0)
      rep.check_near("decay slope p=1", fit.slope, -e.b_g, opts.tolerance);
    else
      rep.check_le("decay bound p=" + label(p) + ": slope <= -b_g + tol", fit.slope, -e.b_g + opts.tolerance);
  }
  if (opts.box_doubling) {
    std::vector<int> pts = grid.points();
    std::vector<double> hw = grid.half_width();
    for (auto& n : pts) n *= 2;
    for (auto& l : hw) l *= 2.0;
    const GridSpec big = make_grid(grid.ndim(), pts, hw);
    describe_grid(rep, big, "doubled_grid");
    const auto series2 = detail::decay_series(realize(spec, big), disp, p_values, times);
    for (std::size_t j = 0; j < p_values.size(); ++j) {
      const double s2 = fit_decay_exponent(series2[j], t_lo, t_hi).slope;
      rep.fit("slope p=" + label(p_values[j]) + " (doubled box)", s2);
      rep.check_le("box doubling p=" + label(p_values[j]) + ": |delta slope|", std::abs(s2 - slopes[j]),
                   0.5 * opts.tolerance);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Self-similarity

struct SelfSimOptions {
  double eta = 0.3;  ///< u0 = eta |x|^{-4/alpha}
  int points = 16384;
  double half_width = 256.0;
  double band_limit = 3.0;
  double window = 8.0;
  double dt_max = 2e-3;
  double delta = 1.0;
  double coupling = 1.0;  ///< lambda of the nonlinearity
  double epsilon = 0.0;
  double tolerance = 0.05;
  /// Lets a nonzero epsilon through; used only for negative controls.
  bool allow_nonzero_epsilon = false;
};

/// Residuals of u(x,t) = lambda^{4/alpha} u(lambda x, lambda^4 t) for a closed-form
/// family, evaluated pointwise on the grid through scale_transform.
inline ExperimentReport synthetic_self_similarity(double alpha, const SpaceTimeFn& u, const GridSpec& grid,
                                                  const std::vector<double>& lambdas, const std::vector<double>& times,
                                                  double tolerance = 1e-12) {
  ExperimentReport rep;
  rep.kind = "selfsim-synthetic";
  rep.echo("alpha", alpha);
  describe_grid(rep, grid);
  double worst = 0.0;
  for (double lam : lambdas) {
    const SpaceTimeFn scaled = scale_transform(u, lam, alpha);
    NormSeries ser;
    ser.kind = "residual_lambda_" + label(lam);
    for (double t : times) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point x = grid.coordinate(i);
        const Complex a = u(x, t), b = scaled(x, t);
        num += std::norm(a - b);
        den += std::norm(a);
      }
      const double res = den > 0.0 ? std::sqrt(num / den) : 0.0;
      worst = std::max(worst, res);
      ser.push(t, res);
    }
    rep.series.push_back(std::move(ser));
  }
  rep.check_lt("synthetic self-similar residual", worst, tolerance);
  return rep;
}

namespace detail {

/// |u| = |v / r| for the radial reduction v = r u, with |v'(0)| at the origin.
inline std::vector<double> radial_amplitude(const ComplexField& v) {
  const GridSpec& g = v.grid();
  std::vector<double> a(v.size());
  std::size_t origin = v.size();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = g.coordinate(i)[0];
    if (x == 0.0)
      origin = i;
    else
      a[i] = std::abs(v[i]) / std::abs(x);
  }
  if (origin < v.size()) {
    ComplexField s = to_spectral(v);
    const auto& k = g.wavenumbers(0);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= Complex(0.0, k[i]);
    zero_nyquist(s);
    a[origin] = std::abs(to_physical(s)[origin]);
  }
  return a;
}

inline ComplexField radial_evolve(const ComplexField& v0, double T, const SelfSimOptions& o, double alpha) {
  if (T == 0.0) return v0;
  EvolveConfig c;
  c.dispersion = {o.epsilon, o.delta, Variant::isotropic, 0};
  c.nonlinearity.lambda = o.coupling;
  c.nonlinearity.alpha = alpha;
  const int steps = static_cast<int>(std::ceil(T / o.dt_max - 1e-9));
  c.dt = T / steps;
  c.t_end = c.dt * steps;
  c.amplitude = radial_amplitude;
  return evolve_to(v0, c);
}

}  // namespace detail

/// Self-similarity of the flow from mollified homogeneous data eta |x|^{-4/alpha}
/// in three dimensions, computed through the exact radial reduction v = r u:
///   i v_t + eps v'' + delta v'''' + lambda |v/r|^alpha v = 0,  v odd in r.
/// The scaling law becomes v(r,t) = lambda^{4/alpha - 1} v(lambda r, lambda^4 t).
/// Residuals compare the band |xi| <= band_limit on the window |x| <= window.
inline ExperimentReport self_similarity_study(double alpha, const SelfSimOptions& o, const std::vector<double>& lambdas,
                                              const std::vector<double>& times) {
  if (o.epsilon != 0.0 && !o.allow_nonzero_epsilon)
    throw DomainError("self_similarity_study: scaling invariance needs epsilon = 0, got " + format_double(o.epsilon));
  const ExponentSet e = exponent_set(3, 0, alpha, 1.5, Variant::isotropic);
  if (!((alpha + 1.0) * e.sigma < 1.0))
    throw DomainError("self_similarity_study: (alpha + 1) sigma = " + format_double((alpha + 1.0) * e.sigma) +
                      " must be < 1 for global solutions from homogeneous data");
  for (double l : lambdas)
    if (!(l > 0.0)) throw DomainError("self_similarity_study: lambdas must be positive");
  ExperimentReport rep;
  rep.kind = "selfsim";
  rep.echo("alpha", alpha);
  rep.echo("eta", o.eta);
  rep.echo("dispersion.epsilon", o.epsilon);
  rep.echo("dispersion.delta", o.delta);
  rep.echo("nonlinearity.lambda", o.coupling);
  rep.echo("band_limit", o.band_limit);
  rep.echo("window", o.window);
  rep.echo("dt_max", o.dt_max);
  rep.echo("tolerance", o.tolerance);
  rep.note("reduction", "radial, n=3");
  rep.note("admissibility (alpha+1) sigma", format_double((alpha + 1.0) * e.sigma));

  const GridSpec g = make_grid(1, {o.points}, {o.half_width});
  describe_grid(rep, g);
  const double r0 = default_mollify_radius(g);
  rep.note("mollify_radius", format_double(r0));
  const double gamma = 4.0 / alpha;
  const ComplexField v0 = sample_function(g, [&](const Point& x) {
    // v0 = r u0 extended oddly; the clamp keeps u0 = eta r0^{-gamma} inside r0.
    const double r = std::max(std::abs(x[0]), r0);
    return Complex(o.eta * x[0] * std::pow(r, -gamma));
  });

  struct Job {
    double lambda, t;
  };
  std::vector<Job> jobs;
  for (double t : times) {
    jobs.push_back({1.0, t});
    for (double l : lambdas)
      if (l != 1.0) jobs.push_back({l, t});
  }
  const auto fields = parallel_map<ComplexField>(jobs.size(), [&](std::size_t i) {
    return detail::radial_evolve(v0, std::pow(jobs[i].lambda, 4.0) * jobs[i].t, o, alpha);
  });
  const RescaleOptions ro{o.band_limit, o.window};
  double worst = 0.0;
  for (double l : lambdas) {
    NormSeries ser;
    ser.kind = "residual_lambda_" + label(l);
    for (double t : times) {
      std::size_t ref = 0, other = 0;
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].t == t && jobs[i].lambda == 1.0) ref = i;
        if (jobs[i].t == t && jobs[i].lambda == l) other = i;
      }
      const ComplexField a = rescale_field(fields[ref], 1.0, ro);
      const ComplexField b = std::pow(l, gamma - 1.0) * rescale_field(fields[other], l, ro);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(a[i]);
      }
      const double res = den > 0.0 ? std::sqrt(num / den) : 0.0;
      worst = std::max(worst, res);
      ser.push(t, res);
    }
    rep.series.push_back(std::move(ser));
  }
  rep.fit("max residual", worst);
  rep.check_lt("self-similarity residual", worst, o.tolerance);
  return rep;
}

// ---------------------------------------------------------------------------
// Picard certification

struct PicardCertifyOptions {
  double ratio_limit = 0.5;
  double agreement_tol = 1e-3;
  /// Split-step substeps per uniform Picard interval in the agreement check.
  int split_substeps = 32;
};

inline ExperimentReport picard_certify(const InitialSpec& spec, const GridSpec& grid, const PicardConfig& pc,
                                       const PicardCertifyOptions& opts = {}) {
  validate(pc, grid.ndim());
  const ExponentSet e = picard_exponents(pc, grid.ndim());
  ExperimentReport rep;
  rep.kind = "picard";
  describe(rep, spec);
  describe(rep, pc.dispersion);
  describe(rep, pc.nonlinearity);
  rep.echo("p", pc.p);
  rep.echo("T_star", pc.T_star);
  rep.echo("quad_nodes", std::to_string(pc.quad_nodes));
  rep.echo("max_iters", std::to_string(pc.max_iters));
  rep.echo("tol", pc.tol);
  describe_grid(rep, grid);
  rep.note("beta", format_double(e.beta));
  rep.note("q", format_double(e.q));
  rep.note("region", to_string(xi0_membership(1.0 / e.p, 1.0 / e.q)));

  const ComplexField u0 = realize(spec, grid);
  PicardResult res;
  try {
    res = picard_iterate(u0, pc);
  } catch (const PicardDivergence& d) {
    res.report = d.report();
    rep.check_flag("Picard iteration does not diverge", false);
  }
  const PicardReport& pr = res.report;
  NormSeries diffs;
  diffs.kind = "difference_norm";
  for (std::size_t k = 0; k < pr.difference_norms.size(); ++k) diffs.push(static_cast<double>(k + 1), pr.difference_norms[k]);
  rep.series.push_back(diffs);
  NormSeries ratios;
  ratios.kind = "contraction_ratio";
  for (std::size_t k = 0; k < pr.contraction_ratios.size(); ++k)
    ratios.push(static_cast<double>(k + 2), pr.contraction_ratios[k]);
  rep.series.push_back(ratios);
  rep.fit("iterate_count", pr.iterate_count);
  rep.fit("C_tilde", pr.c_tilde);
  rep.fit("K", pr.K);
  rep.fit("predicted_bound", pr.predicted_bound);
  const double worst_ratio =
      pr.contraction_ratios.empty() ? 0.0 : *std::max_element(pr.contraction_ratios.begin(), pr.contraction_ratios.end());
  rep.check_le("contraction ratios", worst_ratio, opts.ratio_limit);
  rep.check_flag("Picard converged", pr.converged);
  if (!pr.converged) return rep;

  // Duhamel residual of the limit in the weighted norm.
  Trajectory image;
  image.times = res.trajectory.times;
  image.fields = duhamel_sweep(res.trajectory, pc.dispersion, pc.nonlinearity, {pc.gauss_order});
  const double residual = weighted_lorentz_norm(difference(image, res.trajectory), e.beta, e.q, pr.t_min);
  rep.check_lt("Duhamel residual", residual, pc.tol);

  // Agreement with the split-step solution at the uniform mesh times.
  EvolveConfig ec;
  ec.dispersion = pc.dispersion;
  ec.nonlinearity = pc.nonlinearity;
  ec.dt = pc.T_star / (pc.quad_nodes * opts.split_substeps);
  ec.t_end = pc.T_star;
  ec.snapshot_stride = opts.split_substeps;
  const Trajectory split = evolve(u0, ec);
  double worst = 0.0;
  NormSeries agree;
  agree.kind = "h2_relative_difference";
  for (std::size_t k = 0; k < split.size(); ++k) {
    const double t = split.times[k];
    const auto it = std::find_if(res.trajectory.times.begin(), res.trajectory.times.end(),
                                 [&](double s) { return std::abs(s - t) <= 1e-12 * pc.T_star; });
    if (it == res.trajectory.times.end()) continue;
    const ComplexField& pu = res.trajectory.fields[static_cast<std::size_t>(it - res.trajectory.times.begin())];
    const double ref = sobolev_norm(split.fields[k], 2.0);
    const double d = sobolev_norm(pu - split.fields[k], 2.0);
    const double rel = ref > 0.0 ? d / ref : d;
    worst = std::max(worst, rel);
    agree.push(t, rel);
  }
  rep.series.push_back(agree);
  rep.check_le("Picard vs split-step H2 relative difference", worst, opts.agreement_tol);
  return rep;
}

// ---------------------------------------------------------------------------
// Vanishing second-order dispersion

enum class EpsMode { h2, weak };

inline const char* to_string(EpsMode m) { return m == EpsMode::h2 ? "h2" : "weak"; }

struct EpsLimitOptions {
  double dt = 1e-3;
  /// Weak mode: spatial index p(alpha + 1) and time exponent r.
  double p = 1.2;
  double r = 0.0;  ///< zero picks 1 + alpha / (1 - beta)
  int snapshot_stride = 10;
  double slope_min = 0.9;
  double monotone_tol = 0.01;
  double shrink_min = 10.0;
};

inline bool is_positive_even_integer(double a) {
  return a > 0.0 && a == std::floor(a) && static_cast<long long>(a) % 2 == 0;
}

/// Checks the hypotheses of the limit theorems; throws DomainError naming the violated one.
inline double eps_limit_preconditions(int n, const DispersionParams& d, const NonlinearityParams& nl, EpsMode mode,
                                      const EpsLimitOptions& o) {
  if (mode == EpsMode::h2) {
    if (!is_positive_even_integer(nl.alpha))
      throw DomainError("eps-limit h2: α must be a positive even integer, got alpha = " + format_double(nl.alpha));
    if (d.variant != Variant::isotropic)
      throw DomainError("eps-limit h2: the H2 limit is stated for the isotropic operator only");
    if (!(n < 4)) throw DomainError("eps-limit h2: needs n < 4");
    if (d.delta * nl.lambda < 0.0) {
      const double na = n * nl.alpha, ratio = na / (4.0 * (nl.alpha + 2.0));
      if (!(na < 8.0)) throw DomainError("eps-limit h2: delta lambda < 0 needs n alpha < 8");
      if (n == 2 ? !(ratio < 1.0) : !(ratio <= 1.0))
        throw DomainError("eps-limit h2: delta lambda < 0 needs n alpha / (4 (alpha + 2)) " +
                          std::string(n == 2 ? "< 1" : "<= 1"));
    }
    return 0.0;
  }
  const ExponentSet e = exponent_set(n, d.d, nl.alpha, o.p, d.variant);
  const double r_min = nl.alpha / (1.0 - e.beta);
  if (!(e.beta < 1.0)) throw DomainError("eps-limit weak: beta must be < 1");
  const double r = o.r > 0.0 ? o.r : 1.0 + r_min;
  if (!(r > r_min))
    throw DomainError("eps-limit weak: needs r > alpha / (1 - beta) = " + format_double(r_min) + ", got r = " +
                      format_double(r));
  return r;
}

/// Distance between u_eps and u_0 from common data, for each eps in the list.
/// h2: ||u_eps(t_eval) - u_0(t_eval)||_{H^2}.
/// weak: L^r(0, t_eval) norm of ||u_eps(t) - u_0(t)||_{(p(alpha+1), inf)}.
inline ExperimentReport eps_limit_study(const InitialSpec& spec, const GridSpec& grid, const DispersionParams& base,
                                        const NonlinearityParams& nl, std::vector<double> eps_list, double t_eval,
                                        EpsMode mode, const EpsLimitOptions& o = {}) {
  validate(base.with_epsilon(0.0), grid.ndim());
  validate(nl);
  const double r = eps_limit_preconditions(grid.ndim(), base, nl, mode, o);
  if (eps_list.empty()) throw DomainError("eps-limit: empty epsilon list");
  std::sort(eps_list.begin(), eps_list.end(), std::greater<double>());
  for (double e : eps_list)
    if (e < 0.0) throw DomainError("eps-limit: epsilon values must be >= 0");

  ExperimentReport rep;
  rep.kind = std::string("eps-limit-") + to_string(mode);
  describe(rep, spec);
  describe(rep, base.with_epsilon(0.0));
  describe(rep, nl);
  rep.echo("t_eval", t_eval);
  rep.echo("dt", o.dt);
  std::string el;
  for (double e : eps_list) el += (el.empty() ? "" : ",") + format_double(e);
  rep.echo("eps_list", el);
  describe_grid(rep, grid);

  const ComplexField u0 = realize(spec, grid);
  EvolveConfig ec;
  ec.nonlinearity = nl;
  ec.dt = o.dt;
  ec.t_end = t_eval;
  ec.snapshot_stride = mode == EpsMode::h2 ? std::numeric_limits<int>::max() : o.snapshot_stride;
  std::vector<double> all = eps_list;
  all.push_back(0.0);
  const auto runs = parallel_map<Trajectory>(all.size(), [&](std::size_t i) {
    EvolveConfig c = ec;
    c.dispersion = base.with_epsilon(all[i]);
    return evolve(u0, c);
  });
  const Trajectory& ref = runs.back();

  double q = 0.0;
  if (mode == EpsMode::weak) {
    q = o.p * (nl.alpha + 1.0);
    rep.echo("p", o.p);
    rep.echo("r", r);
    rep.note("weak index p(alpha+1)", format_double(q));
  }
  std::vector<double> errors;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const Trajectory& tr = runs[i];
    if (mode == EpsMode::h2) {
      errors.push_back(sobolev_norm(tr.back() - ref.back(), 2.0));
    } else {
      NormSeries s;
      s.kind = "weak_lp_" + label(q) + "_difference_eps_" + label(eps_list[i]);
      for (std::size_t k = 1; k < tr.size(); ++k) s.push(tr.times[k], weak_lp_norm(tr.fields[k] - ref.fields[k], q));
      errors.push_back(s.size() ? xt_norm(s, r) : 0.0);
      rep.series.push_back(std::move(s));
    }
  }
  NormSeries err;
  err.kind = mode == EpsMode::h2 ? "h2_error_vs_eps" : "xt_error_vs_eps";
  for (std::size_t i = eps_list.size(); i-- > 0;) err.push(eps_list[i], errors[i]);
  rep.series.insert(rep.series.begin(), err);

  // Monotonicity over the list sorted by decreasing eps.
  bool strict = true;
  double worst_increase = 0.0;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (!(errors[i] < errors[i - 1])) strict = false;
    if (errors[i - 1] > 0.0) worst_increase = std::max(worst_increase, errors[i] / errors[i - 1] - 1.0);
  }
  rep.check_le("error non-increasing as eps decreases (relative increase)", worst_increase, o.monotone_tol);
  if (mode == EpsMode::h2) rep.check_flag("errors strictly decreasing", strict);

  std::vector<double> pos_eps, pos_err;
  for (std::size_t i = 0; i < eps_list.size(); ++i)
    if (eps_list[i] > 0.0 && errors[i] > 0.0) {
      pos_eps.push_back(eps_list[i]);
      pos_err.push_back(errors[i]);
    }
  if (pos_eps.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < pos_eps.size(); ++i) {
      mx += std::log(pos_eps[i]);
      my += std::log(pos_err[i]);
    }
    mx /= pos_eps.size();
    my /= pos_eps.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < pos_eps.size(); ++i) {
      sxx += std::pow(std::log(pos_eps[i]) - mx, 2);
      sxy += (std::log(pos_eps[i]) - mx) * (std::log(pos_err[i]) - my);
    }
    const double slope = sxy / sxx;
    rep.fit("rate in eps", slope);
    if (mode == EpsMode::h2 && !nl.is_linear()) rep.check_ge("fitted rate in eps", slope, o.slope_min);
    if (mode == EpsMode::weak)
      rep.check_ge("shrink factor from largest to smallest eps", pos_err.front() / pos_err.back(), o.shrink_min);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Radial symmetry

struct RadialOptions {
  double tolerance = 1e-8;
  /// Rings are taken up to this fraction of the half width.
  double radius_fraction = 0.5;
};

/// Largest population variance of |u| over rings of grid points with equal
/// integer i^2 + j^2 offset from the origin, up to the radius limit.
inline double ring_variance(const ComplexField& u, double radius_fraction) {
  const GridSpec& g = u.grid();
  const int n0 = g.points(0), n1 = g.points(1);
  const double h = g.spacing(0);
  const long long rmax = static_cast<long long>(std::floor(radius_fraction * g.half_width(0) / h));
  std::vector<double> sum(rmax * rmax + 1, 0.0), sum2(rmax * rmax + 1, 0.0);
  std::vector<int> count(rmax * rmax + 1, 0);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) {
      const long long di = i - n0 / 2, dj = j - n1 / 2;
      const long long r2 = di * di + dj * dj;
      if (r2 > rmax * rmax) continue;
      const double a = std::abs(u[g.flatten({i, j, 0})]);
      sum[r2] += a;
      sum2[r2] += a * a;
      ++count[r2];
    }
  double worst = 0.0;
  for (std::size_t r2 = 0; r2 < sum.size(); ++r2) {
    if (count[r2] < 2) continue;
    const double mean = sum[r2] / count[r2];
    worst = std::max(worst, std::max(0.0, sum2[r2] / count[r2] - mean * mean));
  }
  return worst;
}

inline ExperimentReport radial_study(const InitialSpec& spec, const GridSpec& grid, const EvolveConfig& cfg,
                                     const RadialOptions& o = {}) {
  if (grid.ndim() != 2) throw DomainError("radial_study: needs a 2D grid");
  if (grid.points(0) != grid.points(1) || grid.half_width(0) != grid.half_width(1))
    throw DomainError("radial_study: needs a square grid with equal spacing");
  ExperimentReport rep;
  rep.kind = "radial";
  describe(rep, spec);
  describe(rep, cfg.dispersion);
  describe(rep, cfg.nonlinearity);
  rep.echo("dt", cfg.dt);
  rep.echo("t_end", cfg.t_end);
  rep.echo("snapshot_stride", std::to_string(cfg.snapshot_stride));
  rep.echo("tolerance", o.tolerance);
  describe_grid(rep, grid);
  const Trajectory tr = evolve(realize(spec, grid), cfg);
  NormSeries s;
  s.kind = "ring_variance";
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double v = ring_variance(tr.fields[k], o.radius_fraction);
    worst = std::max(worst, v);
    s.push(tr.times[k], v);
  }
  rep.series.push_back(s);
  rep.check_lt("ring angular variance", worst, o.tolerance);
  return rep;
}

// ---------------------------------------------------------------------------
// Split-step convergence and plain evolution

struct ConvergenceOptions {
  int reference_divisor = 16;
  double order_lo = 1.8, order_hi = 2.2;
  double drift_lo = 3.5, drift_hi = 4.5;
  int mass_steps = 1000;
  double mass_tol = 1e-10;
};

/// Strang order in H2 against a reference at dt_min / reference_divisor, energy
/// drift ratios under dt halving, and mass drift over mass_steps steps.
inline ExperimentReport convergence_study(const InitialSpec& spec, const GridSpec& grid, const EvolveConfig& base,
                                          std::vector<double> dts, const ConvergenceOptions& o = {}) {
  if (dts.size() < 2) throw DomainError("convergence_study: need at least two dt levels");
  std::sort(dts.begin(), dts.end(), std::greater<double>());
  ExperimentReport rep;
  rep.kind = "convergence";
  describe(rep, spec);
  describe(rep, base.dispersion);
  describe(rep, base.nonlinearity);
  rep.echo("t_end", base.t_end);
  describe_grid(rep, grid);
  const ComplexField u0 = realize(spec, grid);
  std::vector<double> levels = dts;
  levels.push_back(dts.back() / o.reference_divisor);
  const auto finals = parallel_map<ComplexField>(levels.size(), [&](std::size_t i) {
    EvolveConfig c = base;
    c.dt = levels[i];
    return evolve_to(u0, c);
  });
  const ComplexField& ref = finals.back();
  const double e0 = conserved_quantities(u0, base.dispersion, base.nonlinearity).energy;
  NormSeries err, drift;
  err.kind = "h2_error_vs_dt";
  drift.kind = "energy_drift_vs_dt";
  std::vector<double> errs, drifts;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    errs.push_back(sobolev_norm(finals[i] - ref, 2.0));
    drifts.push_back(std::abs(conserved_quantities(finals[i], base.dispersion, base.nonlinearity).energy - e0));
  }
  for (std::size_t i = dts.size(); i-- > 0;) {
    err.push(dts[i], errs[i]);
    drift.push(dts[i], drifts[i]);
  }
  rep.series.push_back(err);
  rep.series.push_back(drift);
  for (std::size_t i = 0; i + 1 < dts.size(); ++i) {
    const double order = std::log(errs[i] / errs[i + 1]) / std::log(dts[i] / dts[i + 1]);
    const double ratio = drifts[i] / drifts[i + 1];
    const std::string tag = label(dts[i]) + "/" + label(dts[i + 1]);
    rep.fit("order " + tag, order);
    rep.fit("energy drift ratio " + tag, ratio);
    rep.verdicts.push_back({"Strang order " + tag + " in [" + label(o.order_lo) + ", " + label(o.order_hi) + "]",
                            order >= o.order_lo && order <= o.order_hi, order, o.order_hi, "in"});
    rep.verdicts.push_back({"energy drift ratio " + tag + " in [" + label(o.drift_lo) + ", " + label(o.drift_hi) + "]",
                            ratio >= o.drift_lo && ratio <= o.drift_hi, ratio, o.drift_hi, "in"});
  }
  if (o.mass_steps > 0) {
    EvolveConfig c = base;
    c.dt = dts.back();
    c.t_end = c.dt * o.mass_steps;
    const ComplexField u = evolve_to(u0, c);
    const double m0 = std::pow(l2_norm(u0), 2), m1 = std::pow(l2_norm(u), 2);
    rep.check_lt("relative mass drift over " + std::to_string(o.mass_steps) + " steps", std::abs(m1 - m0) / m0,
                 o.mass_tol);
  }
  return rep;
}

struct EvolveRunOptions {
  double metrics_p = 2.0;
  double mass_tol = 1e-8;
  bool keep_snapshots = true;
};

/// Plain evolution with per-snapshot metrics and a relative mass-drift verdict.
inline ExperimentReport evolve_run(const InitialSpec& spec, const GridSpec& grid, const EvolveConfig& cfg,
                                   const EvolveRunOptions& o = {}) {
  ExperimentReport rep;
  rep.kind = "evolve";
  describe(rep, spec);
  describe(rep, cfg.dispersion);
  describe(rep, cfg.nonlinearity);
  rep.echo("dt", cfg.dt);
  rep.echo("t_end", cfg.t_end);
  rep.echo("snapshot_stride", std::to_string(cfg.snapshot_stride));
  rep.echo("dealias_fraction", cfg.dealias_fraction);
  describe_grid(rep, grid);
  rep.metrics_p = o.metrics_p;
  const Trajectory tr = evolve(realize(spec, grid), cfg);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    rep.metrics.push_back(metrics_row(tr.fields[k], tr.times[k], cfg.dispersion, cfg.nonlinearity, o.metrics_p));
    if (o.keep_snapshots) rep.snapshots.push_back({"snapshot_" + std::to_string(k), tr.times[k], tr.fields[k]});
  }
  const double m0 = rep.metrics.front().mass;
  double drift = 0.0;
  for (const auto& m : rep.metrics) drift = std::max(drift, m0 > 0.0 ? std::abs(m.mass - m0) / m0 : m.mass);
  rep.check_lt("relative mass drift", drift, o.mass_tol);
  return rep;
}

/// Norm inventory of the initial data, with the weak-star sandwich as a verdict.
inline ExperimentReport norms_run(const InitialSpec& spec, const GridSpec& grid, const DispersionParams& d,
                                  const NonlinearityParams& nl, const std::vector<double>& p_values) {
  ExperimentReport rep;
  rep.kind = "norms";
  describe(rep, spec);
  describe(rep, d);
  describe(rep, nl);
  describe_grid(rep, grid);
  const ComplexField u = realize(spec, grid);
  const Rearrangement r = decreasing_rearrangement(u);
  rep.metrics_p = p_values.empty() ? 2.0 : p_values.front();
  rep.metrics.push_back(metrics_row(u, 0.0, d, nl, rep.metrics_p));
  for (double p : p_values) {
    const double ws = weak_star(r, p), w = lorentz_quasinorm(r, p, infinity);
    rep.fit("weak_star p=" + label(p), ws);
    rep.fit("weak_lp p=" + label(p), w);
    rep.fit("lorentz (p,p) p=" + label(p), lorentz_quasinorm(r, p, p));
    rep.fit("lp p=" + label(p), lp_norm(u, p));
    rep.check_flag("weak-star sandwich p=" + label(p), ws <= w * (1 + 1e-12) && w <= p / (p - 1.0) * ws * (1 + 1e-12));
  }
  return rep;
}

}  // namespace f4nls
