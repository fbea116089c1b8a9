#pragma once

#include <cstddef>
#include <functional>

namespace esv {

/// Worker count for parallel regions: ESV_THREADS when set to a positive
/// integer, hardware concurrency otherwise.
int thread_budget();

/// Runs fn(i) for i in [begin, end), partitioned into contiguous chunks over
/// the thread budget. Callers keep determinism by writing to disjoint slots
/// and reducing serially afterwards; small ranges run inline.
void parallel_for(size_t begin, size_t end, const std::function<void(size_t)>& fn);

}  // namespace esv
