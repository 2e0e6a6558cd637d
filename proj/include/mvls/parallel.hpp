#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mvls::par {

// Execution policy for the hot kernels. Every kernel that accepts an Exec is
// written so that Serial and Parallel produce bit-identical results: parallel
// loops only ever write disjoint output slots and reductions are finished in
// index order on a single thread.
enum class Exec { Serial, Parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

// Honors the MVLS_THREADS environment variable if set. Call once at startup.
inline void init_threads_from_env() {
  if (const char* env = std::getenv("MVLS_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) set_threads(n);
  }
}

// Exceptions thrown by the body must not escape an OpenMP region; the first
// one is captured and rethrown (as std::runtime_error) after the loop.
template <class F>
void for_each_index(Exec exec, std::int64_t n, F&& body) {
  if (exec == Exec::Parallel) {
#ifdef _OPENMP
    std::atomic<bool> failed{false};
    std::string message;
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        body(i);
      } catch (const std::exception& e) {
        bool expected = false;
        if (failed.compare_exchange_strong(expected, true)) {
#pragma omp critical(mvls_par_error)
          message = e.what();
        }
      } catch (...) {
        failed.store(true);
      }
    }
    if (failed.load())
      throw std::runtime_error(message.empty() ? "parallel loop failed" : message);
    return;
#endif
  }
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace mvls::par
