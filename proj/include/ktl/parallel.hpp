#pragma once

#include <cstddef>
#include <functional>

namespace ktl {

// Worker count: KTL_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

// Calls body(i) for i in [0, n). Each index is visited exactly once; callers
// must write results to per-index slots so output is schedule independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ktl
