#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace fbsde::parallel {

// Caps the worker pool. 0 restores the hardware default.
void set_max_threads(int n);
int max_threads();

// Runs fn(begin, end) over fixed-size chunks of [0, n). Chunk boundaries do
// not depend on the thread count, so per-index work is reproducible as long
// as chunks write to disjoint state.
void for_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

// Fixed-order pairwise summation; result is independent of thread count
// (it is sequential) and less rounding-prone than a running sum.
double pairwise_sum(std::span<const double> values);

}  // namespace fbsde::parallel
