#pragma once

#include <cstdint>

#ifdef HDRT_OPENMP
#include <omp.h>
#endif

namespace hdrt {

/// Execution policy for the data-parallel kernels. `serial` is the reference
/// path used by tests and benchmarks; `parallel` spreads the outer loop over
/// OpenMP threads when the library is built with OpenMP.
enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef HDRT_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Iterations must be independent; the body receives the loop index.
template <typename Fn>
void parallel_for(Exec exec, std::int64_t n, Fn&& body) {
#ifdef HDRT_OPENMP
    if (exec == Exec::parallel && n > 1) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
#endif
    (void)exec;
    for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace hdrt
