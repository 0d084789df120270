#pragma once

#include <cstddef>
#include <functional>

namespace magthermo {

/// Worker count for parallel_for (default: 1). Values < 1 are clamped.
void set_thread_count(int threads);
int thread_count();

/// Runs body(0..n-1) on up to thread_count() workers. Each index is executed
/// exactly once; callers write results into per-index slots so the outcome
/// does not depend on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace magthermo
