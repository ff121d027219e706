#pragma once

#include <cstddef>
#include <span>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace blowlab::par {

// threads == 0 means "runtime default"; threads == 1 forces a serial pass.
struct ExecPolicy {
    int threads = 0;
};

inline ExecPolicy serial() { return ExecPolicy{1}; }

inline int resolved_threads(const ExecPolicy& pol) {
#ifdef _OPENMP
    return pol.threads > 0 ? pol.threads : omp_get_max_threads();
#else
    (void)pol;
    return 1;
#endif
}

namespace detail {

template <typename F>
void parallel_for_impl(std::size_t n, std::size_t min_parallel, const ExecPolicy& pol, F&& body) {
    const int nt = resolved_threads(pol);
#ifdef _OPENMP
    if (nt > 1 && n >= min_parallel) {
#pragma omp parallel for schedule(static) num_threads(nt)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            body(static_cast<std::size_t>(i));
        return;
    }
#endif
    (void)nt;
    (void)min_parallel;
    for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace detail

// Elementwise loop over [0, n). Iterations must be independent. Small loops
// run serially; the fork overhead dwarfs sub-2k element bodies.
template <typename F>
void parallel_for(std::size_t n, const ExecPolicy& pol, F&& body) {
    detail::parallel_for_impl(n, 2048, pol, std::forward<F>(body));
}

// Fan-out for a small number of heavy independent tasks (shots, sweep cells).
template <typename F>
void parallel_tasks(std::size_t n, const ExecPolicy& pol, F&& body) {
    detail::parallel_for_impl(n, 2, pol, std::forward<F>(body));
}

// Reductions are blocked with a fixed block size so results are bit-identical
// for every thread count: each block is scanned serially, blocks are combined
// in index order by the caller.
inline constexpr std::size_t kReduceBlock = 4096;

inline std::size_t num_blocks(std::size_t n) { return (n + kReduceBlock - 1) / kReduceBlock; }

template <typename F>
void for_each_block(std::size_t n, const ExecPolicy& pol, F&& block_body) {
    detail::parallel_for_impl(num_blocks(n), 2, pol, [&](std::size_t b) {
        const std::size_t lo = b * kReduceBlock;
        const std::size_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
        block_body(b, lo, hi);
    });
}

}  // namespace blowlab::par
