#pragma once

#include <cstddef>
#include <functional>

namespace mg {

// Worker count: MG_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

// Runs body(i) for i in [0, n). Calls made from inside a worker run inline,
// so nested parallel regions do not oversubscribe. The first exception thrown
// by any body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace mg
