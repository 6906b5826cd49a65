#pragma once

#include <cstddef>
#include <functional>

namespace locmm {

// Worker count from LOCMM_THREADS, else the hardware concurrency.
int worker_count();

// Runs fn(0..n-1) across workers. Nested calls run serially on the calling
// thread. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace locmm
