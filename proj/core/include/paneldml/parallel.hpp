#pragma once

#include <cstddef>
#include <functional>

namespace paneldml {

/// Maximum worker threads used by internally parallel operations
/// (forest fitting, simulation). 0 restores the hardware default.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs fn(i) for i in [0, n) across up to n_threads workers.
/// Work items must be independent; results keyed by index stay
/// bit-identical to a sequential run regardless of schedule.
/// Exceptions from workers are rethrown on the calling thread.
void parallel_for(std::size_t n, unsigned n_threads, const std::function<void(std::size_t)>& fn);

} // namespace paneldml
