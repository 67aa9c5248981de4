#pragma once

// Norms, conserved quantities, exponents and decay fits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "f4nls/dispersion.hpp"
#include "f4nls/error.hpp"
#include "f4nls/grid.hpp"
#include "f4nls/nonlinearity.hpp"

namespace f4nls {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Rearrangement and Lorentz norms

/// Nonincreasing rearrangement of |u| with every sample an atom of measure `cell`.
/// g*(t) = values[k] for t in [k cell, (k+1) cell).
struct Rearrangement {
  double cell = 0.0;
  std::vector<double> values;

  double measure() const { return cell * static_cast<double>(values.size()); }
  double breakpoint(std::size_t k) const { return cell * static_cast<double>(k); }
};

inline Rearrangement decreasing_rearrangement(const ComplexField& field) {
  field.require(Space::physical, "decreasing_rearrangement");
  Rearrangement r;
  r.cell = field.grid().cell_volume();
  r.values.reserve(field.size());
  for (const Complex& z : field.samples()) r.values.push_back(std::abs(z));
  std::stable_sort(r.values.begin(), r.values.end(), std::greater<double>());
  return r;
}

/// (integral of (g*)^q)^{1/q}; q = infinity gives the leading value.
inline double lp_norm(const Rearrangement& r, double q) {
  if (r.values.empty()) return 0.0;
  if (std::isinf(q)) return r.values.front();
  double s = 0.0;
  for (double v : r.values) s += std::pow(v, q);
  return std::pow(r.cell * s, 1.0 / q);
}

/// Direct grid-sum L^q norm of a physical field.
inline double lp_norm(const ComplexField& field, double q) {
  field.require(Space::physical, "lp_norm");
  if (!(q >= 1.0)) throw DomainError("lp_norm: q must be >= 1");
  if (std::isinf(q)) {
    double m = 0.0;
    for (const Complex& z : field.samples()) m = std::max(m, std::abs(z));
    return m;
  }
  double s = 0.0;
  for (const Complex& z : field.samples()) s += std::pow(std::abs(z), q);
  return std::pow(field.grid().cell_volume() * s, 1.0 / q);
}

inline double linf_norm(const ComplexField& field) { return lp_norm(field, infinity); }

/// sup_t t^{1/p} g*(t): the weak-star quantity, attained at the right ends of steps.
inline double weak_star(const Rearrangement& r, double p) {
  double best = 0.0;
  for (std::size_t k = 0; k < r.values.size(); ++k)
    best = std::max(best, std::pow(r.breakpoint(k + 1), 1.0 / p) * r.values[k]);
  return best;
}

namespace detail {

// 8-point Gauss-Legendre on [-1, 1].
inline constexpr std::array<double, 8> gl8_nodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> gl8_weights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

}  // namespace detail

/// Lorentz quasinorm built on g**(t) = (1/t) int_0^t g*.
///   d_index = infinity: sup_t t^{1/p} g**(t)
///   finite d_index:     ((p/d) int_0^inf [t^{1/p} g**(t)]^d dt/t)^{1/d}
/// Past the box measure V the rearrangement vanishes, so g**(t) = S/t there.
inline double lorentz_quasinorm(const Rearrangement& r, double p, double d_index) {
  if (!(p > 1.0)) throw DomainError("lorentz_quasinorm: p must be > 1, got " + std::to_string(p));
  if (!(d_index >= 1.0)) throw DomainError("lorentz_quasinorm: d_index must be >= 1");
  if (r.values.empty() || r.values.front() == 0.0) return 0.0;
  const double h = r.cell;
  const double ip = 1.0 / p;
  if (std::isinf(d_index)) {
    // On each step t^{1/p} g**(t) = A t^{1/p - 1} + g_k t^{1/p} with A >= 0 has
    // only an interior minimum, so the supremum sits at a breakpoint.
    double best = 0.0, s = 0.0;
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      s += h * r.values[k];
      const double t = r.breakpoint(k + 1);
      best = std::max(best, std::pow(t, ip) * s / t);
    }
    return best;
  }
  const double d = d_index;
  const std::size_t n = r.values.size();
  // First step: g** = g_0, integral of t^{d/p - 1} on (0, h].
  double total = std::pow(r.values[0], d) * std::pow(h, d * ip) / (d * ip);
  double s = h * r.values[0];
  for (std::size_t k = 1; k < n; ++k) {
    const double a = r.breakpoint(k), b = r.breakpoint(k + 1);
    const double gk = r.values[k];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
      const double t = mid + half * detail::gl8_nodes[j];
      const double gss = (s + gk * (t - a)) / t;
      acc += detail::gl8_weights[j] * std::pow(std::pow(t, ip) * gss, d) / t;
    }
    total += half * acc;
    s += h * gk;
  }
  // Tail t > V: [t^{1/p - 1} S]^d / t integrates to S^d V^{d(1/p - 1)} / (d (1 - 1/p)).
  const double v = r.measure();
  total += std::pow(s, d) * std::pow(v, d * (ip - 1.0)) / (d * (1.0 - ip));
  return std::pow((p / d) * total, 1.0 / d);
}

inline double lorentz_quasinorm(const ComplexField& field, double p, double d_index) {
  return lorentz_quasinorm(decreasing_rearrangement(field), p, d_index);
}

inline double weak_lp_norm(const ComplexField& field, double p) { return lorentz_quasinorm(field, p, infinity); }

// ---------------------------------------------------------------------------
// Sobolev norms and conserved quantities

/// (h sum <xi>^{2s} |u^(xi)|^2)^{1/2} with <xi>^2 = 1 + |xi|^2, h the cell volume.
inline double sobolev_norm(const ComplexField& field, double s) {
  const ComplexField spec = field.space() == Space::spectral ? field : to_spectral(field);
  const GridSpec& g = spec.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Point k = g.wavevector(i);
    const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    const double w = s == 0.0 ? 1.0 : std::pow(1.0 + k2, s);
    acc += w * std::norm(spec[i]);
  }
  return std::sqrt(g.cell_volume() * acc);
}

inline double l2_norm(const ComplexField& field) { return sobolev_norm(field, 0.0); }

struct ConservedQuantities {
  double mass = 0.0;
  double energy = 0.0;
};

/// mass = ||u||_2^2
/// energy = delta ||A^{1/2}-part||^2 - eps ||grad u||^2 + (2 lambda/(alpha+2)) ||u||_{alpha+2}^{alpha+2}
/// with the fourth-order part ||Lap u||^2 (isotropic) or sum_{i<d} ||u_{x_i x_i}||^2.
inline ConservedQuantities conserved_quantities(const ComplexField& field, const DispersionParams& disp,
                                                const NonlinearityParams& nl) {
  field.require(Space::physical, "conserved_quantities");
  const ComplexField spec = to_spectral(field);
  const GridSpec& g = spec.grid();
  const int n = g.ndim();
  double mass = 0.0, grad2 = 0.0, quartic = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Point k = g.wavevector(i);
    const auto xi = detail::leading(k, n);
    const double c2 = std::norm(spec[i]);
    mass += c2;
    grad2 += detail::squared_norm(xi) * c2;
    quartic += detail::fourth_order_part(xi, disp) * c2;
  }
  const double h = g.cell_volume();
  ConservedQuantities q;
  q.mass = h * mass;
  double potential = 0.0;
  if (nl.kind == NonlinearityKind::power && nl.lambda != 0.0) {
    double s = 0.0;
    for (const Complex& z : field.samples()) s += std::pow(std::abs(z), nl.alpha + 2.0);
    potential = 2.0 * nl.lambda / (nl.alpha + 2.0) * h * s;
  }
  q.energy = disp.delta * h * quartic - disp.epsilon * h * grad2 + potential;
  return q;
}

// ---------------------------------------------------------------------------
// Exponents and the admissible region

struct ExponentSet {
  double p = 0.0;
  double q = 0.0;         ///< local-theory index p(alpha + 1)
  double q_global = 0.0;  ///< global-theory index alpha + 2
  double beta = 0.0;
  double sigma = 0.0;
  double b_l = 0.0;  ///< local decay exponent at q
  double b_g = 0.0;  ///< global decay exponent at q = p'
  Variant variant = Variant::isotropic;
  int n = 1;
  int d = 0;
  double alpha = 2.0;

  /// n for the isotropic operator, 2n - d for the anisotropic one.
  double effective_dimension() const { return variant == Variant::isotropic ? n : 2.0 * n - d; }
  double local_exponent(double qq) const { return effective_dimension() / 4.0 * (1.0 / p - 1.0 / qq); }
};

inline ExponentSet exponent_set(int n, int d, double alpha, double p, Variant variant) {
  if (n < 1 || n > 3) throw DomainError("exponent_set: n must be 1, 2 or 3");
  if (!(alpha >= 1.0)) throw DomainError("exponent_set: alpha must be >= 1");
  if (!(p >= 1.0)) throw DomainError("exponent_set: p must be >= 1");
  if (variant == Variant::anisotropic && (d < 1 || d >= n))
    throw DomainError("exponent_set: anisotropic d must satisfy 1 <= d < n");
  ExponentSet e;
  e.p = p;
  e.n = n;
  e.d = variant == Variant::anisotropic ? d : 0;
  e.alpha = alpha;
  e.variant = variant;
  const double m = e.effective_dimension();
  e.q = p * (alpha + 1.0);
  e.q_global = alpha + 2.0;
  e.beta = m * alpha / (4.0 * p * (alpha + 1.0));
  e.sigma = 1.0 / alpha - m / (4.0 * (alpha + 2.0));
  e.b_l = e.local_exponent(e.q);
  e.b_g = m / 4.0 * (2.0 / p - 1.0);
  return e;
}

enum class Xi0Class { interior, boundary, outside };

inline const char* to_string(Xi0Class c) {
  switch (c) {
    case Xi0Class::interior: return "interior";
    case Xi0Class::boundary: return "boundary";
    default: return "outside";
  }
}

/// Classifies (1/p, 1/q) against the quadrilateral with vertices
/// R0 = (1/2, 1/2), P0 = (2/3, 0), B = (1, 0), Q0 = (1, 1/3).
/// Edges and the vertices B, R0 belong to the region; P0 and Q0 do not.
inline Xi0Class xi0_membership(double inv_p, double inv_q, double tol = 1e-12) {
  if (inv_p < -tol || inv_p > 1.0 + tol || inv_q < -tol || inv_q > 1.0 + tol)
    throw DomainError("xi0_membership: coordinates must lie in [0, 1]");
  const double x = inv_p, y = inv_q;
  // Signed slacks, positive inside.
  const std::array<double, 4> slack = {3.0 * x + y - 2.0, 2.0 - x - 3.0 * y, y, 1.0 - x};
  bool on_edge = false;
  for (double s : slack) {
    if (s < -tol) return Xi0Class::outside;
    if (s <= tol) on_edge = true;
  }
  if (!on_edge) return Xi0Class::interior;
  auto near = [&](double px, double py) { return std::abs(x - px) <= tol && std::abs(y - py) <= tol; };
  if (near(2.0 / 3.0, 0.0) || near(1.0, 1.0 / 3.0)) return Xi0Class::outside;
  return Xi0Class::boundary;
}

// ---------------------------------------------------------------------------
// Time series

struct NormSeries {
  std::string kind;  ///< e.g. "linf", "lp_2", "weak_lp_3.6", "h2"
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return times.size(); }
  void push(double t, double v) {
    times.push_back(t);
    values.push_back(v);
  }
};

inline void validate(const NormSeries& s) {
  if (s.times.size() != s.values.size()) throw DomainError("NormSeries: times and values differ in length");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s.values[i]) || s.values[i] < 0.0)
      throw DomainError("NormSeries: value at t = " + std::to_string(s.times[i]) + " is negative or non-finite");
    if (i > 0 && !(s.times[i] > s.times[i - 1])) throw DomainError("NormSeries: times must increase");
  }
}

/// max |t|^w v over the samples.
inline double weighted_time_norm(const NormSeries& s, double weight_exponent) {
  validate(s);
  double best = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.times[i] == 0.0) throw DomainError("weighted_time_norm: t = 0 in the series, the weight degenerates");
    best = std::max(best, std::pow(std::abs(s.times[i]), weight_exponent) * s.values[i]);
  }
  return best;
}

enum class TimeMesh { uniform, geometric };

/// L^r(0, T) norm of the series by the trapezoidal rule on its own mesh.
/// When the first sample sits at t0 > 0, the piece (0, t0) is integrated in
/// closed form for the power law through the first two samples.
inline double xt_norm(const NormSeries& s, double r, TimeMesh mesh = TimeMesh::uniform) {
  (void)mesh;
  validate(s);
  if (s.size() == 0) throw DomainError("xt_norm: empty series");
  if (!(r >= 1.0)) throw DomainError("xt_norm: r must be >= 1");
  double acc = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i)
    acc += 0.5 * (s.times[i] - s.times[i - 1]) * (std::pow(s.values[i], r) + std::pow(s.values[i - 1], r));
  const double t0 = s.times.front(), v0 = s.values.front();
  if (t0 > 0.0 && v0 > 0.0) {
    double gamma = 0.0;
    if (s.size() > 1 && s.values[1] > 0.0) gamma = -std::log(s.values[1] / v0) / std::log(s.times[1] / t0);
    if (r * gamma >= 1.0 || !std::isfinite(gamma)) gamma = 0.0;
    acc += std::pow(v0, r) * t0 / (1.0 - r * gamma);
  }
  return std::pow(acc, 1.0 / r);
}

struct DecayFit {
  double slope = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Least-squares slope of log v against log t over samples with t in [t_lo, t_hi].
inline DecayFit fit_decay_exponent(const NormSeries& s, double t_lo, double t_hi) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = s.times[i];
    if (t < t_lo || t > t_hi) continue;
    if (!(t > 0.0)) throw DomainError("fit_decay_exponent: nonpositive time in window");
    if (!(s.values[i] > 0.0))
      throw DomainError("fit_decay_exponent: nonpositive value at t = " + std::to_string(t));
    lx.push_back(std::log(t));
    ly.push_back(std::log(s.values[i]));
  }
  const std::size_t m = lx.size();
  if (m < 5) throw DomainError("fit_decay_exponent: need at least 5 samples in the window, got " + std::to_string(m));
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / m;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  DecayFit fit;
  fit.samples = m;
  fit.slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = ly[i] - my - fit.slope * (lx[i] - mx);
    ssr += e * e;
  }
  fit.std_error = std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
  return fit;
}

/// Geometric mesh t_lo * ratio^k up to and including t_hi.
inline std::vector<double> geometric_mesh(double t_lo, double t_hi, double ratio = std::pow(2.0, 0.25)) {
  if (!(t_lo > 0.0) || !(t_hi >= t_lo) || !(ratio > 1.0)) throw DomainError("geometric_mesh: bad bounds");
  std::vector<double> t;
  for (double x = t_lo; x < t_hi * (1.0 - 1e-12); x *= ratio) t.push_back(x);
  t.push_back(t_hi);
  return t;
}

/// n points spaced geometrically between t_lo and t_hi inclusive.
inline std::vector<double> log_spaced(double t_lo, double t_hi, int n) {
  if (n < 2 || !(t_lo > 0.0) || !(t_hi > t_lo)) throw DomainError("log_spaced: bad arguments");
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = t_lo * std::pow(t_hi / t_lo, static_cast<double>(i) / (n - 1));
  t.back() = t_hi;
  return t;
}

}  // namespace f4nls
