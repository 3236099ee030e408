#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hdsa::detail {

// Runs body(i) for i in [0, n) across hardware threads. Each index must write only its own slot.
template <class F>
void parallel_for(long n, F&& body) {
  const long workers = std::min<long>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (long w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (long i = w; i < n; i += workers) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace hdsa::detail
