#pragma once

#include <thread>
#include <vector>

#include "lrpr/types.hpp"

namespace lrpr {

// Runs fn(chunk_index, begin, end) over a contiguous split of [0, count).
// chunk results must be combined by the caller in chunk order so the parallel
// path stays deterministic for a fixed thread count.
template <typename Fn>
void parallel_chunks(Index count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    fn(0, Index(0), count);
    return;
  }
  const int used = int(std::min<Index>(threads, count));
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (int c = 0; c < used; ++c) {
    const Index begin = count * c / used;
    const Index end = count * (c + 1) / used;
    pool.emplace_back([&fn, c, begin, end] { fn(c, begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace lrpr
