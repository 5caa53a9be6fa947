#pragma once

#include <cstddef>
#include <functional>

namespace arlab {

// Runs body(i) for i in [0, n) on up to `threads` workers with a static block
// partition. Callers write results into per-index slots and reduce in index
// order afterwards, so output never depends on the thread count.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned default_threads();

}  // namespace arlab
