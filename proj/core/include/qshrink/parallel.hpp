#ifndef QSHRINK_PARALLEL_HPP
#define QSHRINK_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace qshrink {

// Worker cap: min(hardware_concurrency, QSHRINK_THREADS) when the env var is
// set to a positive integer, else hardware_concurrency.
int max_threads();

// Runs fn(begin, end) over a static partition of [0, n) across worker threads.
// Chunks are contiguous, so writing results into preallocated slots indexed by
// the loop variable is race free and gives thread-count-independent output.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn,
                  int threads = 0);

} // namespace qshrink

#endif
