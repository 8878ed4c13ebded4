#pragma once

#include <cstddef>
#include <functional>

namespace lagmc {

// Worker count: LAGMC_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

// Calls body(i) for i in [0, count) split into contiguous chunks across
// threads. body must only write to state owned by index i.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace lagmc
