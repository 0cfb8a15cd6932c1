// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace subband {

/// Fixed-size worker pool for data-parallel loops. Work items write to
/// disjoint outputs and any cross-item reduction is performed by the caller
/// in item order, so results do not depend on the worker count. A pool of
/// size 1 runs everything inline on the calling thread.
class ThreadPool {
 public:
  explicit ThreadPool(unsigned threads) {
    if (threads < 1) threads = 1;
    for (unsigned i = 0; i + 1 < threads; ++i)
      workers_.emplace_back([this] { worker_loop(); });
  }

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  unsigned size() const { return static_cast<unsigned>(workers_.size()) + 1; }

  /// Runs fn(0) ... fn(count-1), each exactly once, blocking until all items
  /// completed. The calling thread participates. Safe to call from multiple
  /// threads; jobs are dispatched one at a time.
  void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& fn) {
    if (count <= 0) return;
    if (workers_.empty() || count == 1) {
      for (std::int64_t i = 0; i < count; ++i) fn(i);
      return;
    }
    std::lock_guard<std::mutex> dispatch(dispatch_mu_);
    auto job = std::make_shared<Job>();
    job->fn = &fn;
    job->count = count;
    {
      std::lock_guard<std::mutex> lock(mu_);
      job_ = job;
      ++generation_;
    }
    cv_.notify_all();
    run_job(*job);
    {
      std::unique_lock<std::mutex> lock(mu_);
      done_cv_.wait(lock, [&] { return job->done.load(std::memory_order_acquire) == count; });
      job_.reset();
    }
  }

  static unsigned hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n ? n : 1;
  }

 private:
  struct Job {
    const std::function<void(std::int64_t)>* fn = nullptr;
    std::int64_t count = 0;
    std::atomic<std::int64_t> next{0};
    std::atomic<std::int64_t> done{0};
  };

  void run_job(Job& job) {
    for (;;) {
      const std::int64_t i = job.next.fetch_add(1, std::memory_order_relaxed);
      if (i >= job.count) return;
      (*job.fn)(i);
      if (job.done.fetch_add(1, std::memory_order_acq_rel) + 1 == job.count) {
        std::lock_guard<std::mutex> lock(mu_);
        done_cv_.notify_all();
      }
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
        if (stopping_) return;
        seen = generation_;
        job = job_;
      }
      if (job) run_job(*job);
    }
  }

  std::vector<std::thread> workers_;
  std::mutex dispatch_mu_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::shared_ptr<Job> job_;
  std::uint64_t generation_ = 0;
  bool stopping_ = false;
};

/// Process-wide pool used by the layer kernels; defaults to one thread.
inline ThreadPool& global_pool(int resize_to = 0) {
  static std::unique_ptr<ThreadPool> pool = std::make_unique<ThreadPool>(1);
  if (resize_to > 0) pool = std::make_unique<ThreadPool>(static_cast<unsigned>(resize_to));
  return *pool;
}

inline void set_global_threads(int threads) { global_pool(threads < 1 ? 1 : threads); }

}  // namespace subband
