#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace hdinfer {

/// Worker count resolution: explicit argument > HDINFER_THREADS env var >
/// hardware concurrency.
int resolve_threads(int requested = 0);

/// Runs fn(i) for i in [0, count) across `threads` workers.  Work items must
/// derive their own RNG streams from a counter so the result is identical for
/// any thread count.  The first exception thrown by a work item is rethrown
/// on the calling thread after all workers finish.
void parallel_for(int count, const std::function<void(int)>& fn, int threads = 0);

}  // namespace hdinfer
