#include "homog/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace homog {

int thread_cap() {
    static const int cap = [] {
        int n = static_cast<int>(std::thread::hardware_concurrency());
        if (n <= 0) n = 1;
        if (const char* env = std::getenv("HOMOG_THREADS")) {
            const int req = std::atoi(env);
            if (req > 0) n = std::min(n, req);
        }
        return n;
    }();
    return cap;
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    const int workers = std::min<std::int64_t>(thread_cap(), std::max<std::int64_t>(n, 1));
    if (workers <= 1 || n < 4096) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::int64_t block = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = w * block;
        const std::int64_t hi = std::min(n, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

double det_dot(const double* a, const double* b, std::int64_t n) {
    // Chunk partials are accumulated in index order regardless of how the
    // chunks were computed; 4096 is small enough to keep partials in cache.
    constexpr std::int64_t kChunk = 4096;
    const std::int64_t nchunks = (n + kChunk - 1) / kChunk;
    std::vector<double> partial(static_cast<size_t>(nchunks), 0.0);
    parallel_for(nchunks, [&](std::int64_t c0, std::int64_t c1) {
        for (std::int64_t c = c0; c < c1; ++c) {
            const std::int64_t lo = c * kChunk;
            const std::int64_t hi = std::min(n, lo + kChunk);
            double s = 0.0;
            for (std::int64_t i = lo; i < hi; ++i) s += a[i] * b[i];
            partial[static_cast<size_t>(c)] = s;
        }
    });
    double sum = 0.0;
    for (double p : partial) sum += p;
    return sum;
}

}  // namespace homog
