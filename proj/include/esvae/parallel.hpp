#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace esvae {

// Worker cap for data-parallel loops. 0 means "use the OpenMP default".
// Results are required to be identical for every setting: loops write into
// per-index slots and all reductions run serially in index order.
void set_jobs(int jobs);
int jobs();

// Serial reference driver, kept alongside the OpenMP one for testing and
// benchmarking.
template <typename F>
void for_each_index_serial(std::ptrdiff_t n, F&& f) {
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
}

template <typename F>
void for_each_index(std::ptrdiff_t n, F&& f) {
#ifdef _OPENMP
    if (jobs() != 1) {
        int threads = jobs();
        if (threads <= 0) threads = omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
        return;
    }
#endif
    for_each_index_serial(n, f);
}

}  // namespace esvae
