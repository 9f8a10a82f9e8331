#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace kerdisc {

/// Worker count: KERDISC_THREADS caps the pool, otherwise hardware concurrency.
inline std::size_t max_threads() {
  static const std::size_t n = [] {
    std::size_t hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("KERDISC_THREADS")) {
      const long v = std::atol(env);
      if (v >= 1 && static_cast<std::size_t>(v) < hw) hw = static_cast<std::size_t>(v);
    }
    return hw;
  }();
  return n;
}

/// Runs fn(begin, end) over fixed-size blocks of [0, count). Block boundaries
/// do not depend on the thread count, so any block-indexed accumulation is
/// bit-identical whether run on 1 thread or many.
inline void parallel_blocks(std::size_t count, std::size_t block,
                            const std::function<void(std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  if (block == 0) block = 1;
  const std::size_t nblocks = (count + block - 1) / block;
  const std::size_t nthreads = std::min(max_threads(), nblocks);
  if (nthreads <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b) fn(b * block, std::min(count, (b + 1) * block));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t b = next.fetch_add(1);
        if (b >= nblocks) return;
        fn(b * block, std::min(count, (b + 1) * block));
      }
    });
  }
  for (auto& th : pool) th.join();
}

/// Deterministic parallel reduction: per-block partial sums in index order.
/// The result is independent of the number of worker threads.
inline double parallel_sum(std::size_t count, const std::function<double(std::size_t)>& term,
                           std::size_t block = 1024) {
  if (count == 0) return 0.0;
  const std::size_t nblocks = (count + block - 1) / block;
  std::vector<double> partial(nblocks, 0.0);
  parallel_blocks(count, block, [&](std::size_t lo, std::size_t hi) {
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += term(i);
    partial[lo / block] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace kerdisc
