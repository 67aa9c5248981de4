#pragma once

// Dispersion symbols and the exact free group of
//   i u_t + eps * Lap u + delta * A u = 0,
// where A is either the bi-Laplacian (isotropic) or the sum of fourth
// derivatives along the first d axes (anisotropic). In Fourier variables the
// group multiplies by exp(-i t a(xi)) with
//   a(xi) = eps |xi|^2 - delta |xi|^4             (isotropic)
//   a(xi) = eps |xi|^2 - delta sum_{j<d} xi_j^4   (anisotropic)

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "f4nls/error.hpp"
#include "f4nls/grid.hpp"

namespace f4nls {

enum class Variant { isotropic, anisotropic };

inline const char* to_string(Variant v) { return v == Variant::isotropic ? "isotropic" : "anisotropic"; }

struct DispersionParams {
  double epsilon = 0.0;
  double delta = 1.0;
  Variant variant = Variant::isotropic;
  int d = 0;  ///< number of fourth-order axes, anisotropic only

  DispersionParams with_epsilon(double e) const {
    DispersionParams p = *this;
    p.epsilon = e;
    return p;
  }
};

/// Checks delta = +-1 and, when ndim > 0, that the anisotropic split fits the grid.
inline void validate(const DispersionParams& p, int ndim = 0) {
  if (p.delta != 1.0 && p.delta != -1.0)
    throw DomainError("dispersion: delta must be +1 or -1, got " + std::to_string(p.delta));
  if (!std::isfinite(p.epsilon)) throw DomainError("dispersion: epsilon must be finite");
  if (p.variant == Variant::anisotropic) {
    if (p.d < 1) throw DomainError("dispersion: anisotropic variant needs d >= 1");
    if (ndim > 0 && p.d >= ndim)
      throw DomainError("dispersion: anisotropic d = " + std::to_string(p.d) + " must be < ndim = " +
                        std::to_string(ndim));
  }
}

namespace detail {

inline double fourth_order_part(std::span<const double> xi, const DispersionParams& p) {
  if (p.variant == Variant::isotropic) {
    double k2 = 0.0;
    for (double x : xi) k2 += x * x;
    return k2 * k2;
  }
  double s = 0.0;
  for (int j = 0; j < p.d && j < static_cast<int>(xi.size()); ++j) {
    const double x2 = xi[j] * xi[j];
    s += x2 * x2;
  }
  return s;
}

inline double squared_norm(std::span<const double> xi) {
  double k2 = 0.0;
  for (double x : xi) k2 += x * x;
  return k2;
}

inline std::span<const double> leading(const Point& p, int ndim) { return {p.data(), static_cast<std::size_t>(ndim)}; }

}  // namespace detail

/// a(xi) such that the free group multiplies by exp(-i t a(xi)).
inline double dispersion_symbol(std::span<const double> xi, const DispersionParams& p) {
  return p.epsilon * detail::squared_norm(xi) - p.delta * detail::fourth_order_part(xi, p);
}

/// |grad a(xi)|, the group speed of the mode xi.
inline double group_speed(std::span<const double> xi, const DispersionParams& p) {
  const double k2 = detail::squared_norm(xi);
  double s = 0.0;
  for (std::size_t j = 0; j < xi.size(); ++j) {
    double g = 2.0 * p.epsilon * xi[j];
    if (p.variant == Variant::isotropic) {
      g -= 4.0 * p.delta * k2 * xi[j];
    } else if (static_cast<int>(j) < p.d) {
      g -= 4.0 * p.delta * xi[j] * xi[j] * xi[j];
    }
    s += g * g;
  }
  return std::sqrt(s);
}

namespace detail {

template <class Multiplier>
ComplexField apply_multiplier(const ComplexField& field, Multiplier&& mult) {
  const bool physical = field.space() == Space::physical;
  ComplexField spec = physical ? to_spectral(field) : field;
  const GridSpec& g = spec.grid();
  const int n = g.ndim();
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Point k = g.wavevector(i);
    spec[i] *= mult(leading(k, n));
  }
  return physical ? to_physical(spec) : spec;
}

}  // namespace detail

/// G(t) field: exact free evolution. Returns a field in the input's space.
inline ComplexField apply_free_group(const ComplexField& field, double t, const DispersionParams& p) {
  validate(p, field.grid().ndim());
  if (t == 0.0) return field;
  return detail::apply_multiplier(field, [&](std::span<const double> xi) {
    return std::polar(1.0, -t * dispersion_symbol(xi, p));
  });
}

/// [G_{eps,delta}(t) - G_{0,delta}(t)] field, via the factored multiplier
/// exp(-i t a_4(xi)) (exp(-i t eps |xi|^2) - 1).
inline ComplexField group_difference(const ComplexField& field, double t, const DispersionParams& p) {
  validate(p, field.grid().ndim());
  return detail::apply_multiplier(field, [&](std::span<const double> xi) {
    const double quartic = p.delta * detail::fourth_order_part(xi, p);
    const double theta = -t * p.epsilon * detail::squared_norm(xi);
    // exp(i theta) - 1 = 2 i sin(theta/2) exp(i theta/2)
    const Complex factor = Complex(0.0, 2.0 * std::sin(0.5 * theta)) * std::polar(1.0, 0.5 * theta);
    return std::polar(1.0, t * quartic) * factor;
  });
}

/// Space-time evaluation rule u(x, t).
using SpaceTimeFn = std::function<Complex(const Point&, double)>;

/// u_lambda(x, t) = lambda^{4/alpha} u(lambda x, lambda^4 t).
inline SpaceTimeFn scale_transform(SpaceTimeFn u, double lambda, double alpha) {
  if (!(lambda > 0.0)) throw DomainError("scale_transform: lambda must be positive");
  if (!(alpha >= 1.0)) throw DomainError("scale_transform: alpha must be >= 1");
  const double amp = std::pow(lambda, 4.0 / alpha);
  const double l4 = lambda * lambda * lambda * lambda;
  return [u = std::move(u), lambda, amp, l4](const Point& x, double t) {
    return amp * u(Point{lambda * x[0], lambda * x[1], lambda * x[2]}, l4 * t);
  };
}

struct RescaleOptions {
  /// Only modes with |xi| <= band_limit / lambda of the source survive, so the
  /// rescaled field is band-limited to |xi| <= band_limit.
  double band_limit = std::numeric_limits<double>::infinity();
  /// Output points with some |x_j| > window are left at zero.
  double window = std::numeric_limits<double>::infinity();
};

/// Samples of the trigonometric interpolant of `field` at lambda * x_j, for
/// every grid point x_j (periodic wrap outside the box). The Nyquist mode is
/// dropped. Evaluated axis by axis, so the cost is O(points * modes) per line.
inline ComplexField rescale_field(const ComplexField& field, double lambda, RescaleOptions opts = {}) {
  if (!(lambda > 0.0)) throw DomainError("rescale_field: lambda must be positive");
  ComplexField work = field.space() == Space::physical ? to_spectral(field) : field;
  const GridSpec& g = work.grid();
  const int n = g.ndim();
  std::vector<Complex> data(work.samples().begin(), work.samples().end());

  std::vector<int> shape = g.points();
  for (int axis = 0; axis < n; ++axis) {
    const int len = shape[axis];
    const auto& k = g.wavenumbers(axis);
    const double L = g.half_width(axis);
    const double h = g.spacing(axis);
    std::vector<int> out_pts;
    for (int i = 0; i < len; ++i)
      if (std::abs(-L + i * h) <= opts.window) out_pts.push_back(i);
    std::vector<int> modes;
    for (int m = 0; m < len; ++m)
      if (m != len / 2 && std::abs(k[m]) <= opts.band_limit / lambda) modes.push_back(m);
    // Unitary inverse DFT evaluated off-grid: sum_k c_k exp(i k (y + L)) / sqrt(N).
    const double norm = 1.0 / std::sqrt(static_cast<double>(len));
    std::vector<Complex> table(out_pts.size() * modes.size());
    for (std::size_t p = 0; p < out_pts.size(); ++p) {
      const double y = lambda * (-L + out_pts[p] * h) + L;
      for (std::size_t q = 0; q < modes.size(); ++q) table[p * modes.size() + q] = std::polar(norm, k[modes[q]] * y);
    }
    std::size_t stride = 1;
    for (int a = axis + 1; a < n; ++a) stride *= static_cast<std::size_t>(shape[a]);
    std::size_t outer = 1;
    for (int a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(shape[a]);
    std::vector<Complex> line_in(len), line_out(len);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t s = 0; s < stride; ++s) {
        const std::size_t base = o * len * stride + s;
        for (int i = 0; i < len; ++i) line_in[i] = data[base + i * stride];
        std::fill(line_out.begin(), line_out.end(), Complex(0.0));
        for (std::size_t p = 0; p < out_pts.size(); ++p) {
          Complex acc = 0.0;
          const Complex* row = &table[p * modes.size()];
          for (std::size_t q = 0; q < modes.size(); ++q) acc += row[q] * line_in[modes[q]];
          line_out[out_pts[p]] = acc;
        }
        for (int i = 0; i < len; ++i) data[base + i * stride] = line_out[i];
      }
    }
  }
  return ComplexField(g, std::move(data), Space::physical);
}

}  // namespace f4nls
