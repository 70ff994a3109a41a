#pragma once
#include <cstddef>
#include <functional>

namespace bglab {

// Worker count from BGLAB_THREADS, else the hardware concurrency.
int thread_count();

// Runs body(begin, end) over contiguous row blocks of [0, n).
void parallel_rows(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace bglab
