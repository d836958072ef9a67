#pragma once

#include <cstddef>
#include <functional>

namespace optitomo {

/// Runs body(i) for i in [0, count) on at most `threads` workers. Work is
/// split into contiguous index blocks, so callers that write results by index
/// get identical output for any thread count.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

/// Process-wide default worker cap used when a caller passes threads <= 0.
void set_default_threads(int threads);
int default_threads();

}  // namespace optitomo
