#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tweetvault {

inline unsigned default_parallelism() { return std::max(1u, std::thread::hardware_concurrency()); }

// Calls fn(i) for every i in [0, n) on up to `threads` threads. The first
// exception thrown by any call is rethrown after all threads finish.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = default_parallelism()) {
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(threads, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(body);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace tweetvault
