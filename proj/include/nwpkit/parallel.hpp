#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nwpkit {

/// Fixed-size worker pool. All library parallelism goes through the process
/// wide instance returned by `WorkerPool::global()`; its size is set once by
/// the CLI (--threads) or left at the hardware concurrency.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t threads);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const noexcept { return workers_.size(); }

  /// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; the
  /// caller blocks until every chunk has finished. Calls made from inside a
  /// worker run serially on that worker. The first exception thrown by any
  /// chunk is rethrown here.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

  static WorkerPool& global();
  /// Replaces the global pool. 0 means hardware concurrency.
  static void set_global_threads(std::size_t threads);

 private:
  void worker_loop();

  std::vector<std::jthread> workers_;
  std::deque<std::function<void()>> queue_;
  std::mutex mutex_;
  std::condition_variable cv_;
  bool stopping_ = false;
};

inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  WorkerPool::global().parallel_for(n, fn);
}

}  // namespace nwpkit
