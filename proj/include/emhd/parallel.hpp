#ifndef EMHD_PARALLEL_HPP
#define EMHD_PARALLEL_HPP

#include <cstddef>
#include <future>
#include <thread>
#include <vector>

namespace emhd {

inline unsigned worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Evaluates fn(i) for i in [0,n) and returns the results in index order.
// Work is split into contiguous ranges, so results are independent of the
// scheduling and the output is bit-identical to a serial run.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn) {
    std::vector<T> out(n);
    if (n == 0) return out;
    unsigned workers = worker_count();
    if (workers <= 1 || n < 4) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::future<void>> futs;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = static_cast<std::size_t>(w) * chunk;
        if (lo >= n) break;
        std::size_t hi = std::min(n, lo + chunk);
        futs.push_back(std::async(std::launch::async, [&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) out[i] = fn(i);
        }));
    }
    for (auto& f : futs) f.get();
    return out;
}

} // namespace emhd

#endif
