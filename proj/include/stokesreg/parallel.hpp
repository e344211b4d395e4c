#pragma once

#include <cstddef>
#include <omp.h>

namespace stokesreg {

/// Sets the worker count used by every parallel loop in the library (n <= 0 keeps the current value).
inline void set_num_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

inline int num_threads() { return omp_get_max_threads(); }

/// Runs fn(i) for i in [0, n). Iterations must be independent; each writes only its own outputs,
/// so results do not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, bool dynamic = false) {
  const auto count = static_cast<long long>(n);
  if (dynamic) {
#pragma omp parallel for schedule(dynamic, 16)
    for (long long i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
  } else {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
  }
}

}  // namespace stokesreg
