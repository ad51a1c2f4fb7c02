#include "tsflab/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tsflab {

int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("TSFLAB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && cap < n) n = cap;
  }
  return n;
}

void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& f) {
  const std::size_t total = end > begin ? end - begin : 0;
  const int workers = worker_count();
  if (total == 0) return;
  if (workers == 1 || total == 1) {
    for (std::size_t i = begin; i < end; ++i) f(i);
    return;
  }
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers), total);
  const std::size_t chunk = (total + n_threads - 1) / n_threads;
  std::vector<std::thread> pool;
  std::exception_ptr first_error = nullptr;
  std::mutex err_mutex;
  for (std::size_t w = 0; w < n_threads; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tsflab
