#pragma once

// Task-count-independent parallel loops. Work items are indexed; callers
// write results into per-index slots and reduce them in index order, so
// the outcome never depends on how many threads ran.

#include <cstddef>
#include <functional>

namespace sawperc {

/// 0 means "use all hardware threads".
void set_thread_limit(unsigned threads) noexcept;
unsigned thread_limit() noexcept;

/// Calls fn(i) for every i in [0, count). Exceptions from fn are rethrown
/// on the calling thread (the lowest failing index wins).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace sawperc
