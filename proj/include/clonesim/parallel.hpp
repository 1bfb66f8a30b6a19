#pragma once

#include <cstddef>
#include <functional>

namespace clonesim {

/// Worker cap: CLONESIM_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(0..n-1) on up to worker_count() threads. Each index writes only
/// its own output slot, so results do not depend on the schedule. If any
/// call throws, the exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace clonesim
