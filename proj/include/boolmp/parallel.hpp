#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace boolmp {

namespace detail {

// Lock-free max-reduction; max is order-insensitive, so the result does not
// depend on the thread count.
inline void atomic_max(std::atomic<double>& target, double v) {
  double cur = target.load(std::memory_order_relaxed);
  while (v > cur &&
         !target.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
  }
}

}  // namespace detail

// Static contiguous partition of [0, n) across `threads` workers. The body
// receives disjoint [lo, hi) ranges, so results do not depend on the thread
// count as long as cells are independent (per-cell reductions stay inside
// one range).
template <typename Fn>
void parallel_for(std::int64_t n, int threads, Fn&& body) {
  if (n <= 0) return;
  if (threads <= 1 || n < 2048) {
    body(std::int64_t{0}, n);
    return;
  }
  int workers = threads;
  if (static_cast<std::int64_t>(workers) > n) workers = static_cast<int>(n);
  std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int w = 1; w < workers; ++w) {
    std::int64_t lo = w * chunk;
    std::int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  body(std::int64_t{0}, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace boolmp
