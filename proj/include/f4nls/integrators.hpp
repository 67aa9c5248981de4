#pragma once

// Strang split-step evolution and the Picard iteration for the mild solution
//   u(t) = G(t) u0 + i int_0^t G(t - s) f(|u(s)|) u(s) ds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "f4nls/analysis.hpp"
#include "f4nls/dispersion.hpp"
#include "f4nls/error.hpp"
#include "f4nls/grid.hpp"
#include "f4nls/nonlinearity.hpp"

namespace f4nls {

struct EvolveConfig {
  DispersionParams dispersion;
  NonlinearityParams nonlinearity;
  double dt = 1e-3;
  double t_end = 1.0;
  int snapshot_stride = 1;
  /// Fraction of modes kept by the dealiasing filter after each step; 1 disables it.
  double dealias_fraction = 2.0 / 3.0;
  /// Optional replacement for |u| as the argument of f (reduced radial problems).
  std::function<std::vector<double>(const ComplexField&)> amplitude;
};

inline int step_count(const EvolveConfig& c) {
  if (!(c.dt != 0.0) || !std::isfinite(c.dt)) throw DomainError("evolve: dt must be nonzero and finite");
  if (!std::isfinite(c.t_end) || c.t_end * c.dt < 0.0)
    throw DomainError("evolve: t_end and dt must share a sign");
  const double ratio = c.t_end / c.dt;
  const double steps = std::round(ratio);
  if (steps < 1.0) throw DomainError("evolve: |dt| exceeds |t_end|");
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
    throw DomainError("evolve: t_end = " + std::to_string(c.t_end) + " is not a multiple of dt = " +
                      std::to_string(c.dt));
  return static_cast<int>(steps);
}

inline void validate(const EvolveConfig& c, int ndim) {
  validate(c.dispersion, ndim);
  validate(c.nonlinearity);
  if (c.snapshot_stride < 1) throw DomainError("evolve: snapshot_stride must be >= 1");
  if (!(c.dealias_fraction > 0.0 && c.dealias_fraction <= 1.0))
    throw DomainError("evolve: dealias_fraction must lie in (0, 1]");
  step_count(c);
}

namespace detail {

inline void half_rotation(ComplexField& u, const EvolveConfig& c) {
  if (c.amplitude)
    rotate_phase(u, c.nonlinearity, 0.5 * c.dt, c.amplitude(u));
  else
    rotate_phase(u, c.nonlinearity, 0.5 * c.dt);
}

inline void check_finite(const ComplexField& u, double t) {
  for (const Complex& z : u.samples())
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw NumericError("strang_step: non-finite field at t = " + std::to_string(t));
}

}  // namespace detail

/// One Strang step: half nonlinear rotation, G(dt), half rotation, dealias.
/// The linear case reduces to a single exact free-group application.
inline ComplexField strang_step(const ComplexField& field, const EvolveConfig& c, double t_now = 0.0) {
  field.require(Space::physical, "strang_step");
  ComplexField u = field;
  const bool linear = c.nonlinearity.is_linear();
  if (!linear) detail::half_rotation(u, c);
  ComplexField spec = apply_free_group(to_spectral(u), c.dt, c.dispersion);
  u = to_physical(spec);
  if (!linear) {
    detail::half_rotation(u, c);
    if (c.dealias_fraction < 1.0) u = to_physical(dealias(to_spectral(u), c.dealias_fraction));
  }
  detail::check_finite(u, t_now + c.dt);
  return u;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<ComplexField> fields;

  std::size_t size() const { return times.size(); }
  const ComplexField& back() const { return fields.back(); }
};

/// Snapshots at every stride multiple of dt, always including t = 0 and t_end.
inline Trajectory evolve(const ComplexField& u0, const EvolveConfig& c) {
  u0.require(Space::physical, "evolve");
  validate(c, u0.grid().ndim());
  const int steps = step_count(c);
  Trajectory tr;
  tr.times.push_back(0.0);
  tr.fields.push_back(u0);
  ComplexField u = u0;
  for (int s = 1; s <= steps; ++s) {
    u = strang_step(u, c, (s - 1) * c.dt);
    if (s % c.snapshot_stride == 0 || s == steps) {
      tr.times.push_back(s * c.dt);
      tr.fields.push_back(u);
    }
  }
  return tr;
}

/// Final state only.
inline ComplexField evolve_to(const ComplexField& u0, EvolveConfig c) {
  c.snapshot_stride = std::numeric_limits<int>::max();
  return evolve(u0, c).back();
}

// ---------------------------------------------------------------------------
// Duhamel quadrature

namespace detail {

inline std::vector<std::pair<double, double>> gauss_legendre(int order) {
  // Newton iteration on the Legendre polynomial P_order.
  std::vector<std::pair<double, double>> nw(order);
  for (int i = 0; i < order; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = order * (x * p1 - p0) / (x * x - 1.0);
    nw[i] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
  }
  std::sort(nw.begin(), nw.end());
  return nw;
}

inline ComplexField spectral_zero(const GridSpec& g) { return ComplexField(g, Space::spectral); }

/// Interaction-picture samples w_k = G(-t_k) u(t_k), spectral.
inline std::vector<ComplexField> interaction_picture(const Trajectory& tr, const DispersionParams& disp) {
  std::vector<ComplexField> w;
  w.reserve(tr.size());
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const ComplexField s = tr.fields[k].space() == Space::spectral ? tr.fields[k] : to_spectral(tr.fields[k]);
    w.push_back(apply_free_group(s, -tr.times[k], disp));
  }
  return w;
}

/// Increment of int G(-s) f(|u(s)|) u(s) ds over [t_k, t_{k+1}], spectral.
/// u(s) is rebuilt as G(s) applied to the linear interpolant of the
/// interaction-picture samples.
inline ComplexField interval_integral(const std::vector<ComplexField>& w, const std::vector<double>& times,
                                      std::size_t k, double upper, const DispersionParams& disp,
                                      const NonlinearityParams& nl,
                                      const std::vector<std::pair<double, double>>& gl) {
  const double a = times[k], b = times[k + 1];
  const double span = b - a;
  ComplexField acc = spectral_zero(w[k].grid());
  const double lo = a, hi = upper;
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  if (half == 0.0) return acc;
  for (const auto& [x, wt] : gl) {
    const double s = mid + half * x;
    const double theta = span > 0.0 ? (s - a) / span : 0.0;
    ComplexField v = w[k];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - theta) * w[k][i] + theta * w[k + 1][i];
    const ComplexField u = to_physical(apply_free_group(v, s, disp));
    const ComplexField fu = to_spectral(apply_nonlinearity(u, nl));
    const ComplexField back = apply_free_group(fu, -s, disp);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += (half * wt) * back[i];
  }
  return acc;
}

}  // namespace detail

struct DuhamelOptions {
  int gauss_order = 4;
};

/// Right-hand side of the mild formulation at every trajectory time:
///   R(t_k) = G(t_k) [u0 + i int_0^{t_k} G(-s) f(|u|) u ds],
/// with trajectory.fields[0] taken as u0 at times[0] = 0. Physical fields out.
inline std::vector<ComplexField> duhamel_sweep(const Trajectory& tr, const DispersionParams& disp,
                                               const NonlinearityParams& nl, DuhamelOptions opts = {}) {
  if (tr.size() == 0 || tr.times.front() != 0.0) throw DomainError("duhamel: trajectory must start at t = 0");
  for (std::size_t k = 1; k < tr.size(); ++k)
    if (!(tr.times[k] > tr.times[k - 1])) throw DomainError("duhamel: trajectory times must increase");
  const auto gl = detail::gauss_legendre(opts.gauss_order);
  const auto w = detail::interaction_picture(tr, disp);
  const ComplexField u0s = w[0];
  std::vector<ComplexField> out;
  out.reserve(tr.size());
  ComplexField integral = detail::spectral_zero(u0s.grid());
  out.push_back(tr.fields[0].space() == Space::physical ? tr.fields[0] : to_physical(tr.fields[0]));
  for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
    if (!nl.is_linear()) integral += detail::interval_integral(w, tr.times, k, tr.times[k + 1], disp, nl, gl);
    ComplexField total = u0s;
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += Complex(0.0, 1.0) * integral[i];
    out.push_back(to_physical(apply_free_group(total, tr.times[k + 1], disp)));
  }
  return out;
}

/// Mild-solution right-hand side at a single time t inside the trajectory's coverage.
inline ComplexField duhamel_rhs(const Trajectory& tr, double t, const DispersionParams& disp,
                                const NonlinearityParams& nl, DuhamelOptions opts = {}) {
  if (tr.size() == 0 || tr.times.front() != 0.0) throw DomainError("duhamel_rhs: trajectory must start at t = 0");
  if (t < 0.0 || t > tr.times.back())
    throw DomainError("duhamel_rhs: t = " + std::to_string(t) + " outside trajectory coverage [0, " +
                      std::to_string(tr.times.back()) + "]");
  const auto gl = detail::gauss_legendre(opts.gauss_order);
  const auto w = detail::interaction_picture(tr, disp);
  ComplexField integral = detail::spectral_zero(w[0].grid());
  if (!nl.is_linear()) {
    for (std::size_t k = 0; k + 1 < tr.size() && tr.times[k] < t; ++k)
      integral += detail::interval_integral(w, tr.times, k, std::min(t, tr.times[k + 1]), disp, nl, gl);
  }
  ComplexField total = w[0];
  for (std::size_t i = 0; i < total.size(); ++i) total[i] += Complex(0.0, 1.0) * integral[i];
  return to_physical(apply_free_group(total, t, disp));
}

inline ComplexField duhamel_rhs(const Trajectory& tr, double t, const EvolveConfig& c, DuhamelOptions opts = {}) {
  return duhamel_rhs(tr, t, c.dispersion, c.nonlinearity, opts);
}

// ---------------------------------------------------------------------------
// Picard iteration

struct PicardConfig {
  DispersionParams dispersion;
  NonlinearityParams nonlinearity;
  double p = 1.2;
  double T_star = 0.5;
  /// Uniform intervals on [0, T*]; t_min = T* / quad_nodes.
  int quad_nodes = 64;
  int max_iters = 50;
  double tol = 1e-10;
  /// Ball radius; zero means 2 ||G(t) u0|| in the weighted norm.
  double K = 0.0;
  double M = 0.0;
  int gauss_order = 4;
};

struct PicardReport {
  int iterate_count = 0;
  std::vector<double> difference_norms;
  std::vector<double> contraction_ratios;
  double c_tilde = 0.0;
  double K = 0.0;
  double predicted_bound = 0.0;
  double t_min = 0.0;
  bool converged = false;
};

class PicardDivergence : public NumericError {
 public:
  PicardDivergence(const std::string& what, PicardReport rep) : NumericError(what), report_(std::move(rep)) {}
  const PicardReport& report() const { return report_; }

 private:
  PicardReport report_;
};

inline ExponentSet picard_exponents(const PicardConfig& c, int ndim) {
  return exponent_set(ndim, c.dispersion.d, c.nonlinearity.alpha, c.p, c.dispersion.variant);
}

/// Checks the admissibility hypotheses; throws DomainError citing the violated one.
inline void validate(const PicardConfig& c, int ndim) {
  validate(c.dispersion, ndim);
  validate(c.nonlinearity);
  if (!(c.p >= 1.0)) throw DomainError("picard: p must be >= 1");
  if (!(c.T_star > 0.0)) throw DomainError("picard: T_star must be positive");
  if (c.quad_nodes < 2) throw DomainError("picard: quad_nodes must be >= 2");
  if (c.max_iters < 1) throw DomainError("picard: max_iters must be >= 1");
  if (c.gauss_order < 1 || c.gauss_order > 16) throw DomainError("picard: gauss_order must lie in [1, 16]");
  const ExponentSet e = picard_exponents(c, ndim);
  const Xi0Class cls = xi0_membership(1.0 / e.p, 1.0 / e.q);
  if (cls != Xi0Class::interior)
    throw DomainError("picard: (1/p, 1/(p(alpha+1))) = (" + std::to_string(1.0 / e.p) + ", " +
                      std::to_string(1.0 / e.q) + ") is " + to_string(cls) +
                      " of the region R0 P0 B Q0; the local theory needs 3x + y > 2, x + 3y < 2, y > 0, x < 1");
  if (!(e.beta * (e.alpha + 1.0) < 1.0))
    throw DomainError("picard: beta (alpha + 1) = " + std::to_string(e.beta * (e.alpha + 1.0)) + " must be < 1");
}

/// Union of the uniform mesh T*/quad_nodes and the 2^{1/4} geometric mesh from t_min to T*, with 0 prepended.
inline std::vector<double> picard_mesh(const PicardConfig& c) {
  const double t_min = c.T_star / c.quad_nodes;
  std::vector<double> t{0.0};
  for (int i = 1; i <= c.quad_nodes; ++i) t.push_back(c.T_star * i / c.quad_nodes);
  for (double g : geometric_mesh(t_min, c.T_star)) t.push_back(g);
  std::sort(t.begin(), t.end());
  std::vector<double> out;
  for (double x : t)
    if (out.empty() || x - out.back() > 1e-12 * c.T_star) out.push_back(x);
  return out;
}

/// sup over mesh times t >= t_min of t^beta ||u(t)||_{(q, inf)}.
inline double weighted_lorentz_norm(const Trajectory& tr, double beta, double q, double t_min) {
  NormSeries s;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.times[k] < t_min * (1.0 - 1e-12)) continue;
    s.push(tr.times[k], weak_lp_norm(tr.fields[k], q));
  }
  return s.size() == 0 ? 0.0 : weighted_time_norm(s, beta);
}

inline Trajectory difference(const Trajectory& a, const Trajectory& b) {
  Trajectory d = a;
  for (std::size_t k = 0; k < d.size(); ++k) d.fields[k] -= b.fields[k];
  return d;
}

/// u_1(t) = G(t) u0 on the Picard mesh.
inline Trajectory picard_first_iterate(const ComplexField& u0, const PicardConfig& c) {
  Trajectory tr;
  tr.times = picard_mesh(c);
  const ComplexField u0s = to_spectral(u0);
  for (double t : tr.times) tr.fields.push_back(to_physical(apply_free_group(u0s, t, c.dispersion)));
  return tr;
}

struct PicardResult {
  Trajectory trajectory;
  PicardReport report;
};

/// u_1 = G(t) u0, u_{k+1} = u_1 + i int_0^t G(t - s) f(|u_k|) u_k ds on the Picard mesh.
/// Stops when the weighted difference drops below tol or after max_iters updates.
inline PicardResult picard_iterate(const ComplexField& u0, const PicardConfig& c) {
  u0.require(Space::physical, "picard_iterate");
  const int ndim = u0.grid().ndim();
  validate(c, ndim);
  const ExponentSet e = picard_exponents(c, ndim);
  const double alpha = c.nonlinearity.alpha;
  const std::vector<double> mesh = picard_mesh(c);

  PicardReport rep;
  rep.t_min = c.T_star / c.quad_nodes;
  const double horizon = std::pow(c.T_star, 1.0 - e.beta * (alpha + 1.0));

  Trajectory current = picard_first_iterate(u0, c);
  const double free_norm = weighted_lorentz_norm(current, e.beta, e.q, rep.t_min);
  rep.K = c.K > 0.0 ? c.K : 2.0 * free_norm;

  const DuhamelOptions dopts{c.gauss_order};
  Trajectory prev_image;  // F(u_{k-1}) contribution, for the C-tilde estimate
  Trajectory prev;
  int rising = 0;
  for (int it = 1; it <= c.max_iters; ++it) {
    Trajectory next;
    next.times = mesh;
    next.fields = duhamel_sweep(current, c.dispersion, c.nonlinearity, dopts);
    const double diff = weighted_lorentz_norm(difference(next, current), e.beta, e.q, rep.t_min);
    rep.iterate_count = it;
    rep.difference_norms.push_back(diff);
    if (it > 1) {
      const double prev_diff = rep.difference_norms[it - 2];
      const double ratio = prev_diff > 0.0 ? diff / prev_diff : 0.0;
      rep.contraction_ratios.push_back(ratio);
      rising = ratio >= 1.0 ? rising + 1 : 0;
      // ||F(u_k) - F(u_{k-1})|| = ||u_{k+1} - u_k||, against ||u_k - u_{k-1}|| (||u_k||^alpha + ||u_{k-1}||^alpha)
      const double nk = weighted_lorentz_norm(current, e.beta, e.q, rep.t_min);
      const double nk1 = weighted_lorentz_norm(prev, e.beta, e.q, rep.t_min);
      const double den = prev_diff * (std::pow(nk, alpha) + std::pow(nk1, alpha)) * horizon;
      if (den > 0.0) rep.c_tilde = std::max(rep.c_tilde, diff / den);
    }
    prev = std::move(current);
    current = std::move(next);
    if (diff < c.tol) {
      rep.converged = true;
      break;
    }
    if (rising >= 3) {
      rep.predicted_bound = 2.0 * rep.c_tilde * std::pow(rep.K, alpha) * horizon;
      throw PicardDivergence("picard_iterate: contraction ratios >= 1 for 3 consecutive iterates", rep);
    }
  }
  rep.predicted_bound = 2.0 * rep.c_tilde * std::pow(rep.K, alpha) * horizon;
  return {std::move(current), std::move(rep)};
}

}  // namespace f4nls
