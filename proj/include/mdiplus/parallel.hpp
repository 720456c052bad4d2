#pragma once

#include <cstddef>
#include <functional>

namespace mdiplus {

// Resolves a requested thread count: values > 0 pass through; 0 means "use
// the MDIPLUS_THREADS environment variable if set, else 1".
int resolve_threads(int requested);

// Runs fn(i) for every i in [0, count), partitioned contiguously across
// worker threads. Each index is processed exactly once, so functions that
// write only into slot i produce results independent of the thread count.
// The first exception thrown by a worker is rethrown on the caller.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace mdiplus
