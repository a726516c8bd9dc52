#include "edgetsn/alloc_tracker.hpp"

namespace edgetsn {

std::atomic<std::size_t> AllocTracker::current_{0};
std::atomic<std::size_t> AllocTracker::peak_{0};

void AllocTracker::on_alloc(std::size_t bytes) noexcept {
  const std::size_t now = current_.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  std::size_t prev = peak_.load(std::memory_order_relaxed);
  while (now > prev && !peak_.compare_exchange_weak(prev, now, std::memory_order_relaxed)) {
  }
}

void AllocTracker::on_free(std::size_t bytes) noexcept {
  current_.fetch_sub(bytes, std::memory_order_relaxed);
}

std::size_t AllocTracker::current_bytes() noexcept { return current_.load(std::memory_order_relaxed); }

std::size_t AllocTracker::peak_bytes() noexcept { return peak_.load(std::memory_order_relaxed); }

void AllocTracker::reset_peak() noexcept { peak_.store(current_.load(std::memory_order_relaxed), std::memory_order_relaxed); }

AllocScope::AllocScope() noexcept : baseline_(AllocTracker::current_bytes()) { AllocTracker::reset_peak(); }

std::size_t AllocScope::peak_above_baseline() const noexcept {
  const std::size_t peak = AllocTracker::peak_bytes();
  return peak > baseline_ ? peak - baseline_ : 0;
}

}  // namespace edgetsn
