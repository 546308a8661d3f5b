#pragma once

#include <cstddef>
#include <functional>

namespace linecancel {

/// Worker count: hardware concurrency, capped by LINECANCEL_THREADS when set.
unsigned worker_count();

/// Runs body(i) for i in [0, n), split into contiguous chunks across workers.
/// body must be safe to call concurrently for distinct i. The first exception
/// thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace linecancel
