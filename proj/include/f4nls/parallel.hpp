#pragma once

// Ordered parallel map over independent sweep points.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace f4nls {

namespace detail {
inline std::atomic<int>& thread_budget() {
  static std::atomic<int> n{1};
  return n;
}
}  // namespace detail

/// Worker count used by experiment sweeps; 1 keeps everything on the caller's thread.
inline void set_thread_count(int n) { detail::thread_budget() = std::max(1, n); }
inline int thread_count() { return detail::thread_budget(); }

/// results[i] = fn(i) for i < n. The first exception thrown by any task is rethrown.
template <class Result, class Fn>
std::vector<Result> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<Result> out(n);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          out[i] = fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace f4nls
