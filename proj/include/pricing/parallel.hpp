#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace pricing {

inline int default_jobs() {
  if (const char* env = std::getenv("PRICING_JOBS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

/// Runs fn(i) for i in [0, count). Callers write results to disjoint,
/// preallocated slots so the outcome does not depend on the worker count.
template <typename Fn>
void parallel_for(long count, int jobs, Fn&& fn) {
  if (jobs <= 0) jobs = default_jobs();
  jobs = static_cast<int>(std::min<long>(jobs, std::max<long>(1, count)));
  if (jobs == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) return;
        fn(i);
      }
    });
  for (auto& t : pool) t.join();
}

}  // namespace pricing
