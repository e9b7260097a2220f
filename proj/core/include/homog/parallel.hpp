#pragma once

#include <cstdint>
#include <functional>

namespace homog {

/// Worker cap shared by all parallel sections. Defaults to the hardware
/// count, clamped by the HOMOG_THREADS environment variable.
int thread_cap();

/// Splits [0, n) into contiguous blocks and runs fn(begin, end) on worker
/// threads. Blocks are assigned by index, so any writes keyed on the loop
/// index are race-free and the partition does not depend on timing.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

/// Dot product with a fixed chunked summation order: the result is
/// bit-identical for any thread count.
double det_dot(const double* a, const double* b, std::int64_t n);

}  // namespace homog
