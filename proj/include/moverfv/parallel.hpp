#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace moverfv {

/// Worker count: MOVERFV_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
inline std::size_t thread_count() {
  if (const char* env = std::getenv("MOVERFV_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (...) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, n). Every index must write only its own output
/// slot; no reductions happen here, so results do not depend on the number of
/// workers.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  constexpr std::size_t kMinChunk = 4096;
  const std::size_t workers = std::min(thread_count(), (n + kMinChunk - 1) / kMinChunk);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace moverfv
