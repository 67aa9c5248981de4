#pragma once

// Thin FFTW3 wrapper: unitary multi-dimensional complex transforms on
// row-major buffers. Plans are created once per (shape, direction) and
// shared; execution through the new-array interface is thread-safe.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "f4nls/error.hpp"

namespace f4nls::fft {

enum class Direction { forward, inverse };

namespace detail {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(const std::vector<int>& shape, Direction dir) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(shape, dir);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::size_t total = 1;
    for (int n : shape) total *= static_cast<std::size_t>(n);
    // ESTIMATE planning never reads or writes the buffer.
    std::vector<std::complex<double>> scratch(total);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), buf, buf,
                                   dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw NumericError("fftw: failed to create plan");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<std::vector<int>, Direction>, fftw_plan> plans_;
};

}  // namespace detail

/// In-place unitary DFT of a row-major array with the given per-axis extents.
/// Forward uses the e^{-i k x} kernel; both directions scale by 1/sqrt(N).
inline void transform(std::span<std::complex<double>> data, const std::vector<int>& shape,
                      Direction dir) {
  fftw_plan plan = detail::PlanCache::instance().get(shape, dir);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
  const double scale = 1.0 / std::sqrt(static_cast<double>(data.size()));
  for (auto& z : data) z *= scale;
}

}  // namespace f4nls::fft
