#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace isoq {

/// Runs body(i) for i in [0, n). With threads > 1 the iterations run on a
/// static block partition; results must be written to disjoint slots so that
/// any later reduction in index order stays bitwise deterministic.
template <typename Body>
void parallel_for(std::size_t n, int threads, const Body& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t nw = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < nw; ++w) {
    pool.emplace_back([&, w]() {
      const std::size_t lo = n * w / nw;
      const std::size_t hi = n * (w + 1) / nw;
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

} // namespace isoq
