#include "mfc/parallel.hpp"

#include <cstdlib>
#include <string>

namespace mfc {

std::size_t thread_count() {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* cap = std::getenv("MFC_NUM_THREADS")) {
    try {
      const long v = std::stol(cap);
      if (v >= 1 && static_cast<std::size_t>(v) < n) n = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      // Ignore malformed values.
    }
  }
  return n;
}

double pairwise_sum(std::span<const double> xs) {
  constexpr std::size_t kBlock = 64;
  if (xs.size() <= kBlock) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace mfc
