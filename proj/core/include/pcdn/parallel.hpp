#pragma once

#include <cstddef>
#include <functional>

namespace pcdn {

// Worker cap shared by every parallel loop in the library. 0 means "use the
// hardware concurrency". Results never depend on this value.
void set_thread_count(std::size_t n);
std::size_t thread_count();

// Calls body(begin, end) over contiguous chunks covering [0, n). Chunks are
// handed to at most thread_count() workers; each index is visited once.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 256);

}  // namespace pcdn
