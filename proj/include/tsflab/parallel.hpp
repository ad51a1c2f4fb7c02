#pragma once

#include <cstddef>
#include <functional>

namespace tsflab {

// Worker cap: min(hardware threads, TSFLAB_THREADS when set). Always >= 1.
int worker_count();

// Runs f(i) for i in [begin, end), statically chunked across workers. Each
// index must write only its own outputs; results are then independent of the
// worker count.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& f);

}  // namespace tsflab
