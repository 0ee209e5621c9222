#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace creak {

// Fixed-size worker pool. parallel_for hands out indices dynamically, so
// callers must write results by index to stay independent of scheduling.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t threads = default_size()) {
    threads = std::max<std::size_t>(threads, 1);
    for (std::size_t i = 1; i < threads; ++i) workers_.emplace_back([this] { worker_loop(); });
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  static std::size_t default_size() { return std::max(1u, std::thread::hardware_concurrency()); }

  // Number of threads that execute work, including the calling thread.
  std::size_t size() const { return workers_.size() + 1; }

  // Runs fn(i) for i in [0, count). Blocks until all calls finish. If any call
  // throws, the exception from the lowest failing index is rethrown.
  template <typename Fn>
  void parallel_for(std::size_t count, Fn&& fn) {
    if (count == 0) return;
    if (workers_.empty() || count == 1) {
      for (std::size_t i = 0; i < count; ++i) fn(i);
      return;
    }

    struct Shared {
      std::atomic<std::size_t> next{0};
      std::atomic<std::size_t> done{0};
      std::mutex m;
      std::condition_variable cv;
      std::size_t failed_index = static_cast<std::size_t>(-1);
      std::exception_ptr error;
    } shared;

    auto drain = [&] {
      for (;;) {
        const std::size_t i = shared.next.fetch_add(1);
        if (i >= count) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(shared.m);
          if (i < shared.failed_index) {
            shared.failed_index = i;
            shared.error = std::current_exception();
          }
        }
        if (shared.done.fetch_add(1) + 1 == count) {
          std::lock_guard lock(shared.m);
          shared.cv.notify_all();
        }
      }
    };

    const std::size_t helpers = std::min(workers_.size(), count - 1);
    {
      std::lock_guard lock(mutex_);
      for (std::size_t h = 0; h < helpers; ++h) tasks_.emplace_back(drain);
    }
    cv_.notify_all();
    drain();
    {
      std::unique_lock lock(shared.m);
      shared.cv.wait(lock, [&] { return shared.done.load() == count; });
    }
    // helpers may still be returning from drain(); wait until none holds a
    // reference to the stack-allocated state
    {
      std::unique_lock lock(mutex_);
      idle_cv_.wait(lock, [&] { return active_ == 0 && tasks_.empty(); });
    }
    if (shared.error) std::rethrow_exception(shared.error);
  }

 private:
  void worker_loop() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return stopping_ || !tasks_.empty(); });
        if (stopping_ && tasks_.empty()) return;
        task = std::move(tasks_.front());
        tasks_.pop_front();
        ++active_;
      }
      task();
      {
        std::lock_guard lock(mutex_);
        --active_;
      }
      idle_cv_.notify_all();
    }
  }

  std::vector<std::thread> workers_;
  std::deque<std::function<void()>> tasks_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::size_t active_ = 0;
  bool stopping_ = false;
};

// Serial fallback when no pool is supplied.
template <typename Fn>
void parallel_for(ThreadPool* pool, std::size_t count, Fn&& fn) {
  if (pool) {
    pool->parallel_for(count, std::forward<Fn>(fn));
  } else {
    for (std::size_t i = 0; i < count; ++i) fn(i);
  }
}

}  // namespace creak
