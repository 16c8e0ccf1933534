#ifndef TDIFF_PARALLEL_HPP
#define TDIFF_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace tdiff {

/// Thread count: explicit request, else $TDIFF_THREADS, else the hardware count.
inline unsigned resolve_threads(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TDIFF_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n). Work is handed out dynamically, so bodies
/// must write only to slot i of their output; results then do not depend on
/// the thread count. The first exception thrown by any body is rethrown.
template <class Body>
void parallel_for(std::uint64_t n, unsigned threads, Body&& body) {
  threads = static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, threads), std::max<std::uint64_t>(n, 1)));
  if (threads <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace tdiff

#endif  // TDIFF_PARALLEL_HPP
