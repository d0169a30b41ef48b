#pragma once

#include <functional>

namespace covfunc {

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Indices are handed out dynamically; the first exception is
/// rethrown after all workers stop.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

int resolve_threads(int threads);

}  // namespace covfunc
