#pragma once

// Deterministic fork-join helper.  Work is split into contiguous index
// ranges that do not depend on the worker count at the call sites that
// matter for reproducibility: every work item owns a derived seed, and
// callers merge per-chunk accumulators in index order.

#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cdg {

// requested > 0 wins; otherwise the CDG_WORKERS environment variable;
// otherwise the hardware concurrency (at least 1).
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CDG_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Partitions [0, total) into `workers` contiguous chunks and runs
// fn(chunk_index, begin, end) for each nonempty chunk.
inline void parallel_chunks(long long total, int workers,
                            const std::function<void(int, long long, long long)>& fn) {
  if (total <= 0) return;
  if (workers < 1) throw std::invalid_argument("worker count must be >= 1");
  const int chunks = static_cast<int>(std::min<long long>(workers, total));
  if (chunks == 1) {
    fn(0, 0, total);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(chunks));
  const long long base = total / chunks;
  const long long extra = total % chunks;
  long long begin = 0;
  for (int c = 0; c < chunks; ++c) {
    const long long len = base + (c < extra ? 1 : 0);
    const long long end = begin + len;
    threads.emplace_back([&fn, c, begin, end] { fn(c, begin, end); });
    begin = end;
  }
  for (auto& t : threads) t.join();
}

}  // namespace cdg
