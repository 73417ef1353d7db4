#pragma once

#include <cstddef>
#include <functional>

namespace mist {

// MIST_THREADS if set and positive, else hardware concurrency.
int thread_count();

// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
// write results by index so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads = 0);

}  // namespace mist
