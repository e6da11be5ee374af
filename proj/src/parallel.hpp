#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace circuits::detail {

inline int parallelism_degree() {
  if (const char* env = std::getenv("CIRCUITS_PARALLELISM")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

// Runs f(i) for i in [0, n); results must be keyed by index so that the
// outcome is independent of completion order.
template <typename F>
void parallel_for(long n, F&& f) {
  const int degree = parallelism_degree();
  if (degree <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> workers;
  const int used = static_cast<int>(std::min<long>(degree, n));
  workers.reserve(used);
  for (int w = 0; w < used; ++w) {
    workers.emplace_back([&] {
      for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace circuits::detail
