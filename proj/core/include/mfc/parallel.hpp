#pragma once

#include <cstddef>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace mfc {

/// Worker count: hardware concurrency, capped by MFC_NUM_THREADS when set.
std::size_t thread_count();

/// Splits [0, n) into contiguous chunks, one per worker, and calls
/// body(begin, end, chunk) on each. Chunk boundaries depend only on n and the
/// worker count; callers write to disjoint index ranges so results never
/// depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t workers = thread_count()) {
  if (n == 0) return;
  if (workers < 1) workers = 1;
  if (workers > n) workers = n;
  if (workers == 1) {
    body(std::size_t{0}, n, std::size_t{0});
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t c = 1; c < workers; ++c) {
      pool.emplace_back([&, c] {
        try {
          body(c * n / workers, (c + 1) * n / workers, c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
    try {
      body(std::size_t{0}, n / workers, std::size_t{0});
    } catch (...) {
      errors[0] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Pairwise (cascade) summation in index order.
double pairwise_sum(std::span<const double> xs);

}  // namespace mfc
