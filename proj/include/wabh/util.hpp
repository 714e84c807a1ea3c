#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace wabh {

/// Pairwise summation with a fixed association order, so reductions are
/// reproducible no matter how the surrounding work is scheduled.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 16) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    std::size_t half = x.size() / 2;
    return pairwise_sum(x.subspan(0, half)) + pairwise_sum(x.subspan(half));
}

inline double pairwise_mean(std::span<const double> x) {
    return x.empty() ? 0.0 : pairwise_sum(x) / static_cast<double>(x.size());
}

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive an independent stream seed from a base seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

inline unsigned thread_count() {
    if (const char* env = std::getenv("WABH_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1u;
}

/// Data-parallel map over [0, n). Each index is processed exactly once and
/// results must be written to disjoint slots, so output is identical for any
/// thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         unsigned nthreads = thread_count()) {
    if (n == 0) return;
    if (nthreads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    unsigned workers = static_cast<unsigned>(std::min<std::size_t>(nthreads, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace wabh
