#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace kwr {

/// Worker count: KWR_THREADS if set (>= 1), else hardware concurrency.
std::size_t worker_count();

/// Calls fn(block) for block in [0, blocks) on up to worker_count() threads.
/// The first exception thrown by any block is rethrown.
void parallel_blocks(std::size_t blocks, const std::function<void(std::size_t)>& fn);

/// splitmix64 finalizer; used to derive independent per-block seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace kwr
