#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace harmsec {

/// Worker count used when an operation is given 0; defaults to the
/// hardware concurrency.
int default_workers();
void set_default_workers(int workers);

/// Runs f(i) for i in [0, n) on up to `workers` threads using static
/// contiguous blocks. The exception raised at the lowest index is rethrown.
template <class F>
void parallel_for(std::size_t n, int workers, F&& f) {
  if (workers <= 0) workers = default_workers();
  std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> threads;
  threads.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    std::size_t lo = n * t / w, hi = n * (t + 1) / w;
    threads.emplace_back([&, t, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) {
        try {
          f(i);
        } catch (...) {
          errors[t] = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  for (std::size_t t = 0; t < w; ++t)
    if (errors[t]) std::rethrow_exception(errors[t]);
}

}  // namespace harmsec
