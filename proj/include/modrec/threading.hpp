#pragma once

#include <cstdint>
#include <functional>

namespace modrec {

/// Worker count: MODREC_THREADS if set (>=1), else hardware concurrency.
int thread_count();

/// Runs fn(i) for i in [begin, end) across up to thread_count() threads.
/// Iterations must write to disjoint state; results are then identical for
/// any thread count.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t)>& fn);

}  // namespace modrec
