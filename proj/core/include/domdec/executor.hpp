#pragma once

// Deterministic batch execution over composite cells. Tasks are assigned to
// workers in contiguous id blocks; results come back in task order.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

namespace domdec {

/// Worker count from DOMDEC_WORKERS, or `fallback` when unset or invalid.
int workersFromEnvironment(int fallback = 1);

class Executor {
 public:
  explicit Executor(int workers = 1);

  int workers() const noexcept { return workers_; }

  /// Runs task(k) for k = 0..count-1 and returns the results ordered by k.
  /// On failure, tasks with a larger index than a known failure are skipped and
  /// the exception of the smallest failing index is rethrown, so the error
  /// identity does not depend on the worker count.
  template <class R>
  std::vector<R> runBatch(std::size_t count, const std::function<R(std::size_t)>& task) const {
    std::vector<std::optional<R>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> firstFailure{std::numeric_limits<std::size_t>::max()};
    auto runRange = [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        if (k > firstFailure.load(std::memory_order_acquire)) return;
        try {
          slots[k].emplace(task(k));
        } catch (...) {
          errors[k] = std::current_exception();
          std::size_t cur = firstFailure.load();
          while (k < cur && !firstFailure.compare_exchange_weak(cur, k)) {
          }
          return;
        }
      }
    };
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers_), count);
    if (w <= 1) {
      runRange(0, count);
    } else {
      std::vector<std::jthread> threads;
      threads.reserve(w);
      for (std::size_t t = 0; t < w; ++t) {
        threads.emplace_back(runRange, t * count / w, (t + 1) * count / w);
      }
    }
    const std::size_t fail = firstFailure.load();
    if (fail < count) std::rethrow_exception(errors[fail]);
    std::vector<R> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
  }

 private:
  int workers_;
};

}  // namespace domdec
