#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace pdbpe {

/// Worker count from PDBPE_THREADS (0 or unset = hardware concurrency).
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads, static
/// contiguous partition. If several indices throw, the exception of the
/// smallest index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace pdbpe
