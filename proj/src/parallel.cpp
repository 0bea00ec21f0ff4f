#include "otsmooth/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace otsmooth {

namespace {
std::atomic<int> g_max_threads{0};
}

void set_max_threads(int t) { g_max_threads.store(t < 0 ? 0 : t); }

int max_threads() {
  int t = g_max_threads.load();
  if (t > 0) return t;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_blocks(std::int64_t n, std::int64_t block_size,
                     const std::function<void(std::int64_t, std::int64_t,
                                              std::int64_t)>& fn) {
  if (n <= 0) return;
  if (block_size <= 0) block_size = n;
  const std::int64_t n_blocks = (n + block_size - 1) / block_size;

  auto run_block = [&](std::int64_t b) {
    const std::int64_t begin = b * block_size;
    const std::int64_t end = std::min(n, begin + block_size);
    fn(b, begin, end);
  };

  const int workers =
      static_cast<int>(std::min<std::int64_t>(max_threads(), n_blocks));
  if (workers <= 1) {
    for (std::int64_t b = 0; b < n_blocks; ++b) run_block(b);
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::int64_t b = next.fetch_add(1);
      if (b >= n_blocks || failed.load()) return;
      try {
        run_block(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace otsmooth
