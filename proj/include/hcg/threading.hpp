#pragma once

#include <algorithm>
#include <atomic>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#ifdef HCG_HAVE_OPENBLAS
extern "C" void openblas_set_num_threads(int);
#endif

namespace hcg {

namespace detail {
inline std::atomic<int>& thread_count_slot() {
    static std::atomic<int> n{0};
    return n;
}
}  // namespace detail

/// Sets the worker count used by intra-op parallel loops. Parallelism is
/// only over independent outputs (summation order never depends on the
/// worker count), so all results are bit-identical for any setting.
inline void set_threads(int n) {
    if (n < 1) n = 1;
    detail::thread_count_slot().store(n, std::memory_order_relaxed);
#ifdef HCG_HAVE_OPENBLAS
    // BLAS calls stay single-threaded; ops parallelize over batch items.
    openblas_set_num_threads(1);
#endif
}

inline int threads() {
    int n = detail::thread_count_slot().load(std::memory_order_relaxed);
    if (n == 0) {
        n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        set_threads(n);
    }
    return n;
}

/// Runs fn(i) for i in [0, count) across the configured workers.
template <typename Fn>
void parallel_for(std::int64_t count, Fn&& fn) {
    const int workers = threads();
    if (workers <= 1 || count <= 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(workers)
    for (std::int64_t i = 0; i < count; ++i) fn(i);
#else
    for (std::int64_t i = 0; i < count; ++i) fn(i);
#endif
}

}  // namespace hcg
