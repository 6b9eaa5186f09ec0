#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace epialloc {

// Worker count from EPIALLOC_THREADS, falling back to the hardware count.
inline std::size_t default_workers() {
  if (const char* env = std::getenv("EPIALLOC_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (...) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, n) over `workers` threads using static contiguous
// chunks. Each index is visited exactly once; callers write into
// preallocated slots so the result does not depend on the schedule.
// The first exception thrown by any worker is rethrown on the caller.
template <typename Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body) {
  if (n == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, w, lo, hi] {
        try {
          for (std::size_t i = lo; i < hi; ++i) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace epialloc
