#pragma once

// Uniform periodic grids on [-L, L)^n and complex sampled fields.
//
// Samples are stored row-major with the last axis fastest. Spectral
// coefficients use FFT ordering: index i on an axis of length N carries the
// integer mode m = i for i < N/2 and m = i - N otherwise, so the unpaired
// Nyquist mode is m = -N/2. The physical wavenumber is (pi / L) * m.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "f4nls/error.hpp"
#include "f4nls/fft.hpp"

namespace f4nls {

using Complex = std::complex<double>;
using Point = std::array<double, 3>;
using MultiIndex = std::array<int, 3>;

enum class Space { physical, spectral };

inline const char* to_string(Space s) { return s == Space::physical ? "physical" : "spectral"; }

class GridSpec;
GridSpec make_grid(int ndim, std::vector<int> points, std::vector<double> half_width);

class GridSpec {
 public:
  GridSpec() = default;

  int ndim() const { return static_cast<int>(points_.size()); }
  const std::vector<int>& points() const { return points_; }
  const std::vector<double>& half_width() const { return half_width_; }
  int points(int axis) const { return points_[axis]; }
  double half_width(int axis) const { return half_width_[axis]; }
  double spacing(int axis) const { return 2.0 * half_width_[axis] / points_[axis]; }
  double max_spacing() const {
    double h = 0.0;
    for (int a = 0; a < ndim(); ++a) h = std::max(h, spacing(a));
    return h;
  }
  double cell_volume() const { return cell_volume_; }
  double volume() const {
    double v = 1.0;
    for (double l : half_width_) v *= 2.0 * l;
    return v;
  }
  std::size_t size() const { return size_; }

  /// Wavenumbers of one axis in FFT order.
  const std::vector<double>& wavenumbers(int axis) const { return wavenumbers_[axis]; }

  static int mode(int i, int n) { return i < n / 2 ? i : i - n; }

  MultiIndex unflatten(std::size_t flat) const {
    MultiIndex idx{0, 0, 0};
    for (int a = ndim() - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(flat % static_cast<std::size_t>(points_[a]));
      flat /= static_cast<std::size_t>(points_[a]);
    }
    return idx;
  }

  std::size_t flatten(const MultiIndex& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < ndim(); ++a) flat = flat * points_[a] + static_cast<std::size_t>(idx[a]);
    return flat;
  }

  Point coordinate(std::size_t flat) const {
    const MultiIndex idx = unflatten(flat);
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < ndim(); ++a) x[a] = -half_width_[a] + idx[a] * spacing(a);
    return x;
  }

  Point wavevector(std::size_t flat) const {
    const MultiIndex idx = unflatten(flat);
    Point k{0.0, 0.0, 0.0};
    for (int a = 0; a < ndim(); ++a) k[a] = wavenumbers_[a][idx[a]];
    return k;
  }

  /// True when any axis of the spectral index sits on its Nyquist mode.
  bool is_nyquist(std::size_t flat) const {
    const MultiIndex idx = unflatten(flat);
    for (int a = 0; a < ndim(); ++a)
      if (idx[a] == points_[a] / 2) return true;
    return false;
  }

  bool operator==(const GridSpec& o) const {
    return points_ == o.points_ && half_width_ == o.half_width_;
  }

 private:
  friend GridSpec make_grid(int, std::vector<int>, std::vector<double>);

  std::vector<int> points_;
  std::vector<double> half_width_;
  std::vector<std::vector<double>> wavenumbers_;
  double cell_volume_ = 0.0;
  std::size_t size_ = 0;
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Builds a grid on [-L_j, L_j) with N_j points per axis; N_j >= 8, powers of two.
inline GridSpec make_grid(int ndim, std::vector<int> points, std::vector<double> half_width) {
  if (ndim < 1 || ndim > 3) throw DomainError("make_grid: ndim must be 1, 2 or 3, got " + std::to_string(ndim));
  if (static_cast<int>(points.size()) != ndim || static_cast<int>(half_width.size()) != ndim)
    throw DomainError("make_grid: points and half_width need one entry per axis");
  for (int a = 0; a < ndim; ++a) {
    if (!is_power_of_two(points[a]))
      throw DomainError("make_grid: axis " + std::to_string(a) + " has " + std::to_string(points[a]) +
                        " points, not a power of two");
    if (points[a] < 8)
      throw DomainError("make_grid: axis " + std::to_string(a) + " needs at least 8 points");
    if (!(half_width[a] > 0.0) || !std::isfinite(half_width[a]))
      throw DomainError("make_grid: half width of axis " + std::to_string(a) + " must be positive");
  }
  GridSpec g;
  g.points_ = std::move(points);
  g.half_width_ = std::move(half_width);
  g.size_ = 1;
  g.cell_volume_ = 1.0;
  g.wavenumbers_.resize(ndim);
  for (int a = 0; a < ndim; ++a) {
    const int n = g.points_[a];
    g.size_ *= static_cast<std::size_t>(n);
    g.cell_volume_ *= g.spacing(a);
    const double dk = std::numbers::pi / g.half_width_[a];
    auto& k = g.wavenumbers_[a];
    k.resize(n);
    for (int i = 0; i < n; ++i) k[i] = dk * GridSpec::mode(i, n);
  }
  return g;
}

/// Sampled complex field living in physical or spectral space.
class ComplexField {
 public:
  ComplexField() = default;
  ComplexField(GridSpec grid, Space space)
      : grid_(std::move(grid)), samples_(grid_.size()), space_(space) {}
  ComplexField(GridSpec grid, std::vector<Complex> samples, Space space)
      : grid_(std::move(grid)), samples_(std::move(samples)), space_(space) {
    if (samples_.size() != grid_.size())
      throw DomainError("ComplexField: " + std::to_string(samples_.size()) + " samples for a grid of " +
                        std::to_string(grid_.size()));
  }

  const GridSpec& grid() const { return grid_; }
  Space space() const { return space_; }
  std::size_t size() const { return samples_.size(); }

  std::span<const Complex> samples() const { return samples_; }
  std::span<Complex> samples() { return samples_; }
  const Complex& operator[](std::size_t i) const { return samples_[i]; }
  Complex& operator[](std::size_t i) { return samples_[i]; }

  void require(Space s, const char* who) const {
    if (space_ != s)
      throw DomainError(std::string(who) + ": expected a " + to_string(s) + "-space field, got " +
                        to_string(space_));
  }

  ComplexField& operator+=(const ComplexField& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] += o.samples_[i];
    return *this;
  }
  ComplexField& operator-=(const ComplexField& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] -= o.samples_[i];
    return *this;
  }
  ComplexField& operator*=(Complex c) {
    for (auto& z : samples_) z *= c;
    return *this;
  }

  friend ComplexField operator+(ComplexField a, const ComplexField& b) { return a += b; }
  friend ComplexField operator-(ComplexField a, const ComplexField& b) { return a -= b; }
  friend ComplexField operator*(Complex c, ComplexField a) { return a *= c; }

 private:
  void check_compatible(const ComplexField& o) const {
    if (!(grid_ == o.grid_) || space_ != o.space_)
      throw DomainError("ComplexField: arithmetic on fields with different grids or spaces");
  }

  GridSpec grid_;
  std::vector<Complex> samples_;
  Space space_ = Space::physical;
};

inline ComplexField to_spectral(const ComplexField& field) {
  field.require(Space::physical, "to_spectral");
  ComplexField out = field;
  fft::transform(out.samples(), field.grid().points(), fft::Direction::forward);
  return ComplexField(field.grid(), std::vector<Complex>(out.samples().begin(), out.samples().end()),
                      Space::spectral);
}

inline ComplexField to_physical(const ComplexField& field) {
  field.require(Space::spectral, "to_physical");
  ComplexField out = field;
  fft::transform(out.samples(), field.grid().points(), fft::Direction::inverse);
  return ComplexField(field.grid(), std::vector<Complex>(out.samples().begin(), out.samples().end()),
                      Space::physical);
}

/// Zeroes every coefficient that sits on a Nyquist mode of some axis.
inline void zero_nyquist(ComplexField& spectral) {
  spectral.require(Space::spectral, "zero_nyquist");
  const GridSpec& g = spectral.grid();
  for (std::size_t i = 0; i < spectral.size(); ++i)
    if (g.is_nyquist(i)) spectral[i] = 0.0;
}

struct SampleOptions {
  /// Points closer than this to the origin are evaluated at the same
  /// direction on the sphere of this radius. Zero disables clamping.
  double mollify_radius = 0.0;
};

/// Clamp radius used for singular homogeneous data: two grid spacings.
inline double default_mollify_radius(const GridSpec& grid) { return 2.0 * grid.max_spacing(); }

inline double radius(const Point& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

/// Pointwise samples of `fn` on the grid, with the clamp rule inside the
/// mollification radius.
template <class Fn>
ComplexField sample_function(const GridSpec& grid, Fn&& fn, SampleOptions opts = {}) {
  ComplexField out(grid, Space::physical);
  const double r0 = opts.mollify_radius;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Point x = grid.coordinate(i);
    if (r0 > 0.0) {
      const double r = radius(x);
      if (r < r0) {
        if (r == 0.0) {
          x = Point{r0, 0.0, 0.0};
        } else {
          for (double& c : x) c *= r0 / r;
        }
      }
    }
    const Complex z = fn(x);
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      const Point at = grid.coordinate(i);
      std::ostringstream msg;
      msg << "sample_function: non-finite sample at x = (";
      for (int a = 0; a < grid.ndim(); ++a) msg << (a ? ", " : "") << at[a];
      msg << ")";
      throw NumericError(msg.str());
    }
    out[i] = z;
  }
  return out;
}

}  // namespace f4nls
