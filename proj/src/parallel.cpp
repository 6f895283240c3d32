#include "nwpkit/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <memory>

namespace nwpkit {

namespace {

thread_local bool t_in_worker = false;

std::mutex g_pool_mutex;
std::unique_ptr<WorkerPool> g_pool;

}  // namespace

WorkerPool::WorkerPool(std::size_t threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  workers_.reserve(threads);
  for (std::size_t i = 0; i < threads; ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  workers_.clear();  // joins before the queue and cv are destroyed
}

void WorkerPool::worker_loop() {
  t_in_worker = true;
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

void WorkerPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (t_in_worker || workers_.size() <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  const std::size_t chunks = std::min(n, workers_.size() * 4);
  std::atomic<std::size_t> remaining{chunks};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::mutex done_mutex;
  std::condition_variable done_cv;

  {
    std::lock_guard lock(mutex_);
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t begin = n * c / chunks;
      const std::size_t end = n * (c + 1) / chunks;
      queue_.emplace_back([&, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) fn(i);
        } catch (...) {
          std::lock_guard elock(error_mutex);
          if (!error) error = std::current_exception();
        }
        if (remaining.fetch_sub(1) == 1) {
          std::lock_guard dlock(done_mutex);
          done_cv.notify_all();
        }
      });
    }
  }
  cv_.notify_all();

  std::unique_lock lock(done_mutex);
  done_cv.wait(lock, [&] { return remaining.load() == 0; });
  if (error) std::rethrow_exception(error);
}

WorkerPool& WorkerPool::global() {
  std::lock_guard lock(g_pool_mutex);
  if (!g_pool) g_pool = std::make_unique<WorkerPool>(0);
  return *g_pool;
}

void WorkerPool::set_global_threads(std::size_t threads) {
  std::lock_guard lock(g_pool_mutex);
  g_pool = std::make_unique<WorkerPool>(threads);
}

}  // namespace nwpkit
