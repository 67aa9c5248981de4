#pragma once

// Nonlinear term f(|u|) u and the 2/3 dealiasing projection.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "f4nls/error.hpp"
#include "f4nls/grid.hpp"

namespace f4nls {

enum class NonlinearityKind { power, custom };

inline const char* to_string(NonlinearityKind k) { return k == NonlinearityKind::power ? "power" : "custom"; }

struct NonlinearityParams {
  double lambda = 0.0;
  double alpha = 2.0;
  /// Lipschitz constant; for the power kind it is |lambda| * alpha when left at zero.
  double c_f = 0.0;
  NonlinearityKind kind = NonlinearityKind::power;
  /// Real profile f(x) for the custom kind; f(|u|) u is the nonlinear term.
  std::function<double(double)> custom_f;

  double f(double x) const {
    if (kind == NonlinearityKind::custom) return custom_f(x);
    if (lambda == 0.0) return 0.0;
    return lambda * std::pow(std::abs(x), alpha);
  }

  double lipschitz_constant() const {
    if (c_f > 0.0 || kind == NonlinearityKind::custom) return c_f;
    return std::abs(lambda) * alpha;
  }

  bool is_linear() const { return kind == NonlinearityKind::power && lambda == 0.0; }
};

inline void validate(const NonlinearityParams& p) {
  if (!(p.alpha >= 1.0) || !std::isfinite(p.alpha))
    throw DomainError("nonlinearity: alpha must be >= 1, got " + std::to_string(p.alpha));
  if (p.kind == NonlinearityKind::power) {
    if (p.lambda != 0.0 && p.lambda != 1.0 && p.lambda != -1.0)
      throw DomainError("nonlinearity: lambda must be -1, 0 or +1, got " + std::to_string(p.lambda));
  } else if (!p.custom_f) {
    throw DomainError("nonlinearity: custom kind needs a profile function");
  }
  if (p.c_f < 0.0) throw DomainError("nonlinearity: c_f must be positive");
}

namespace detail {

inline void require_finite(const ComplexField& field, const char* who, std::size_t i, Complex z) {
  if (std::isfinite(z.real()) && std::isfinite(z.imag())) return;
  const Point x = field.grid().coordinate(i);
  std::ostringstream msg;
  msg << who << ": non-finite value at x = (";
  for (int a = 0; a < field.grid().ndim(); ++a) msg << (a ? ", " : "") << x[a];
  msg << ")";
  throw NumericError(msg.str());
}

}  // namespace detail

/// Pointwise f(|u|) u.
inline ComplexField apply_nonlinearity(const ComplexField& field, const NonlinearityParams& p) {
  field.require(Space::physical, "apply_nonlinearity");
  ComplexField out = field;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Complex z = out[i];
    out[i] = p.f(std::abs(z)) * z;
    detail::require_finite(out, "apply_nonlinearity", i, out[i]);
  }
  return out;
}

/// Exact flow of i u_t + f(|u|) u = 0 over time tau: u exp(i f(|u|) tau).
/// `amplitude`, if non-empty, replaces |u| as the argument of f.
inline void rotate_phase(ComplexField& field, const NonlinearityParams& p, double tau,
                         const std::vector<double>& amplitude = {}) {
  field.require(Space::physical, "rotate_phase");
  const bool own = amplitude.empty();
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double a = own ? std::abs(field[i]) : amplitude[i];
    const double phase = p.f(a) * tau;
    if (!std::isfinite(phase)) detail::require_finite(field, "rotate_phase", i, Complex(phase, 0.0));
    field[i] *= std::polar(1.0, phase);
  }
}

/// Largest |m| kept on an axis of n points for the given fraction (2/3 rule: floor(n/3)).
inline int dealias_cutoff(int n, double fraction) {
  return static_cast<int>(std::floor(n * fraction / 2.0 + 1e-12));
}

/// Zeroes every coefficient with |m_j| above the cutoff on some axis.
inline ComplexField dealias(ComplexField spectral, double fraction = 2.0 / 3.0) {
  spectral.require(Space::spectral, "dealias");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("dealias: fraction must lie in (0, 1]");
  const GridSpec& g = spectral.grid();
  const int n = g.ndim();
  std::vector<std::vector<char>> keep(n);
  for (int a = 0; a < n; ++a) {
    const int len = g.points(a);
    const int cut = dealias_cutoff(len, fraction);
    keep[a].resize(len);
    for (int i = 0; i < len; ++i) keep[a][i] = std::abs(GridSpec::mode(i, len)) <= cut;
  }
  for (std::size_t i = 0; i < spectral.size(); ++i) {
    const MultiIndex idx = g.unflatten(i);
    for (int a = 0; a < n; ++a) {
      if (!keep[a][idx[a]]) {
        spectral[i] = 0.0;
        break;
      }
    }
  }
  return spectral;
}

struct LipschitzReport {
  double max_ratio = 0.0;
  std::pair<double, double> worst_pair{0.0, 0.0};
  std::size_t pairs_checked = 0;
  double c_f = 0.0;
  bool pass = true;
};

/// max |f(x) - f(y)| / (|x - y| (|x|^{alpha-1} + |y|^{alpha-1})) against c_f.
inline LipschitzReport check_lipschitz(const NonlinearityParams& p, const std::vector<std::pair<double, double>>& samples) {
  LipschitzReport rep;
  rep.c_f = p.lipschitz_constant();
  for (const auto& [x, y] : samples) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw DomainError("check_lipschitz: non-finite sample pair");
    if (x == y) continue;
    const double den = std::abs(x - y) * (std::pow(std::abs(x), p.alpha - 1.0) + std::pow(std::abs(y), p.alpha - 1.0));
    const double num = std::abs(p.f(x) - p.f(y));
    const double ratio = den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    ++rep.pairs_checked;
    if (ratio > rep.max_ratio || rep.pairs_checked == 1) {
      rep.max_ratio = ratio;
      rep.worst_pair = {x, y};
    }
  }
  rep.pass = rep.max_ratio <= rep.c_f * (1.0 + 1e-12);
  return rep;
}

}  // namespace f4nls
