#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace radiant {

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Work is handed
/// out in contiguous chunks; the first exception thrown by any worker is
/// rethrown on the caller's thread after all workers finish.
template <class Body>
void parallel_for(size_t count, int jobs, Body&& body) {
  if (count == 0) return;
  const size_t workers = std::min<size_t>(std::max(jobs, 1), count);
  if (workers == 1) {
    for (size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const size_t chunk = std::max<size_t>(1, count / (workers * 8));
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (;;) {
      const size_t begin = next.fetch_add(chunk);
      if (begin >= count) return;
      const size_t end = std::min(count, begin + chunk);
      try {
        for (size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace radiant
