#pragma once

#include <cstdint>
#include <functional>

namespace otsmooth {

// Global worker-count knob (0 = hardware concurrency). The CLI sets this from
// --threads; library code reads it through parallel_blocks.
void set_max_threads(int t);
int max_threads();

// Splits [0, n) into consecutive blocks of size block_size and runs
// fn(block_index, begin, end) for each, possibly on several threads.
//
// Determinism contract: fn must write results into per-block slots (or merge
// integers) so that the outcome is a pure function of the block index. Blocks
// are claimed dynamically, so nothing may depend on which worker runs a block.
void parallel_blocks(std::int64_t n, std::int64_t block_size,
                     const std::function<void(std::int64_t, std::int64_t,
                                              std::int64_t)>& fn);

}  // namespace otsmooth
