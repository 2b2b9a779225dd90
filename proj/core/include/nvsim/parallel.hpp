#pragma once

#include <cstddef>
#include <functional>

namespace nvsim {

// Runs fn(i) for every i in [0, n). Work is split into contiguous index
// blocks, one per worker, so callers that write results into preallocated
// per-index slots get output independent of the thread count. With
// threads <= 1 the loop runs inline.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace nvsim
