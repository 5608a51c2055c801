#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace sdde {

/// Runs fn(i) for i in [0, n) on up to `threads` workers with a static
/// partition. Work items must write only to their own slot; the caller
/// reduces in index order afterwards, so results never depend on `threads`.
/// If several items throw, the exception of the lowest index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (n == 0) return;
    threads = std::max(1u, threads);
    if (threads == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::size_t> failed_at(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t begin = n * w / workers;
            const std::size_t end = n * (w + 1) / workers;
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                    failed_at[w] = i;
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    std::size_t first = workers;
    for (std::size_t w = 0; w < workers; ++w) {
        if (errors[w] && (first == workers || failed_at[w] < failed_at[first])) first = w;
    }
    if (first != workers) std::rethrow_exception(errors[first]);
}

/// Pairwise (cascade) sum; order-fixed so reductions are reproducible.
template <class It, class Proj>
double pairwise_sum(It first, It last, Proj proj) {
    const auto n = static_cast<std::size_t>(last - first);
    if (n <= 8) {
        double s = 0.0;
        for (; first != last; ++first) s += proj(*first);
        return s;
    }
    const It mid = first + static_cast<std::ptrdiff_t>(n / 2);
    return pairwise_sum(first, mid, proj) + pairwise_sum(mid, last, proj);
}

template <class Range>
double pairwise_sum(const Range& r) {
    return pairwise_sum(std::begin(r), std::end(r), [](double x) { return x; });
}

} // namespace sdde
