#pragma once

#include <cstddef>
#include <functional>

namespace imc {

// Runs body(i) for i in [0, n) across worker threads. Each index is visited
// exactly once; callers must write only to index-owned state. The first
// exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned max_threads = 0);

}  // namespace imc
