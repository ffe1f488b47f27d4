#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace owf {

/// Static-partition parallel loop. fn(begin, end) runs on [begin, end) chunks;
/// the partition depends only on (n, threads), never on scheduling, so any
/// result written to disjoint index ranges is identical for every thread
/// count. threads <= 1 runs inline.
template <typename Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
  if (n == 0) return;
  size_t t = threads <= 0 ? std::thread::hardware_concurrency() : static_cast<size_t>(threads);
  if (t > n) t = n;
  if (t <= 1) {
    fn(size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::vector<std::exception_ptr> errs(t);
  pool.reserve(t);
  for (size_t w = 0; w < t; ++w) {
    size_t begin = n * w / t;
    size_t end = n * (w + 1) / t;
    pool.emplace_back([&, w, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace owf
