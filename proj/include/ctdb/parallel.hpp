#pragma once

#include <cstddef>
#include <functional>

namespace ctdb {

/// Worker count: CTDB_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Overrides the worker count for the current process (0 restores the default).
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n). Each index is processed exactly once; callers
/// write only to index-owned output so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ctdb
