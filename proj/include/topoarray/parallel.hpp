#pragma once
// Static-partition parallel loop; results are written by index so the output
// does not depend on scheduling.

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace topo {

inline int default_workers() {
  unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : int(h);
}

template <class F>
void parallel_for(int n, int workers, F&& fn) {
  if (workers <= 0) workers = default_workers();
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace topo
