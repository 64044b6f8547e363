#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fgrn {

/// Fixed set of threads that run one chunked job at a time. The calling
/// thread takes chunk 0, so a pool of size 1 spawns nothing.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned workers);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  unsigned size() const { return size_; }

  /// Calls fn(chunk) for every chunk in [0, size()) and waits. If several
  /// chunks throw, the lowest chunk's exception is rethrown.
  void run(const std::function<void(unsigned)>& fn);

 private:
  void worker_loop(unsigned chunk);

  unsigned size_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(unsigned)>* job_ = nullptr;
  std::vector<std::exception_ptr> errors_;
  std::size_t generation_ = 0;
  unsigned pending_ = 0;
  bool stopping_ = false;
};

/// Splits [0, n) into contiguous ranges, one per pool chunk, and calls
/// fn(begin, end, chunk). A null pool runs everything inline as chunk 0.
template <class Fn>
void parallel_ranges(WorkerPool* pool, std::size_t n, Fn&& fn) {
  if (pool == nullptr || pool->size() <= 1 || n <= 1) {
    fn(std::size_t{0}, n, 0u);
    return;
  }
  const unsigned chunks = pool->size();
  pool->run([&](unsigned chunk) {
    const std::size_t begin = n * chunk / chunks;
    const std::size_t end = n * (chunk + 1) / chunks;
    if (begin < end) fn(begin, end, chunk);
  });
}

}  // namespace fgrn
