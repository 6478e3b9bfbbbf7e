// parallel.hpp - deterministic static-partition parallel loop.
//
// Work is split into `jobs` contiguous ranges by index, so the mapping from
// item to worker never depends on scheduling. Callers that reduce must do so
// in worker order to stay bit-reproducible for a fixed jobs count.

#pragma once

#include <cstddef>
#include <functional>

namespace ccep {

/// Runs fn(begin, end, worker) over [0, n) split into `jobs` contiguous
/// chunks. jobs <= 1 runs inline on the calling thread.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t, std::size_t, int)>& fn);

}  // namespace ccep
