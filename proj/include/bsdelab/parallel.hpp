#pragma once

#include <cstddef>
#include <functional>

namespace bsdelab {

// Number of fixed work chunks used by parallel maps and reductions. The chunk
// layout never depends on the thread count, so per-chunk partial results can
// be combined in chunk order and the outcome is bit-identical for any number
// of threads.
inline constexpr std::size_t kParallelChunks = 256;

// Runs fn(chunk_index, begin, end) over [0, count) split into kParallelChunks
// contiguous ranges. threads <= 1 runs inline.
void parallel_chunks(std::size_t count, int threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

} // namespace bsdelab
