#pragma once

#include <cstddef>
#include <functional>

namespace volinfo {

// Worker count: VOLINFO_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, n). Each index is visited exactly once, so results
// written to per-index slots do not depend on the schedule. If any call throws,
// the exception from the lowest failing index is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace volinfo
