#pragma once

#include <functional>
#include <future>
#include <vector>

namespace miaudit {

/// Runs fn(0..count-1), at most `jobs` tasks in flight. Each index must be
/// independent; results the caller collects by index stay deterministic
/// regardless of the job count.
inline void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> pending;
  pending.reserve(static_cast<size_t>(jobs));
  for (int i = 0; i < count; ++i) {
    if (static_cast<int>(pending.size()) >= jobs) {
      pending.front().get();
      pending.erase(pending.begin());
    }
    pending.push_back(std::async(std::launch::async, fn, i));
  }
  for (auto& f : pending) f.get();
}

}  // namespace miaudit
