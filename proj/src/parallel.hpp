#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace histent::detail {

// Runs body(begin, end) over contiguous blocks of [0, n) on up to `workers`
// threads. The first exception thrown by any block is rethrown.
template <typename Body>
void parallel_blocks(std::size_t n, unsigned workers, Body&& body) {
  const std::size_t threads = std::max<std::size_t>(1, std::min<std::size_t>(workers, n));
  if (threads == 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// Same, but hands out single indices dynamically (uneven per-item cost).
template <typename Body>
void parallel_items(std::size_t n, unsigned workers, Body&& body) {
  const std::size_t threads = std::max<std::size_t>(1, std::min<std::size_t>(workers, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  std::size_t next = 0;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(guard);
          if (failure || next >= n) return;
          i = next++;
        }
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(guard);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace histent::detail
