#pragma once

#include <atomic>
#include <cstddef>
#include <new>

namespace edgetsn {

// Process-wide accounting of tensor payload bytes. Every Tensor allocates
// through TrackingAllocator, so current/peak reflect live tensor storage.
class AllocTracker {
 public:
  static void on_alloc(std::size_t bytes) noexcept;
  static void on_free(std::size_t bytes) noexcept;

  static std::size_t current_bytes() noexcept;
  static std::size_t peak_bytes() noexcept;
  // Sets the high-water mark back to the current live byte count.
  static void reset_peak() noexcept;

 private:
  static std::atomic<std::size_t> current_;
  static std::atomic<std::size_t> peak_;
};

template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    auto* p = static_cast<T*>(::operator new(n * sizeof(T)));
    AllocTracker::on_alloc(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    AllocTracker::on_free(n * sizeof(T));
    ::operator delete(p);
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

// Measures the tensor high-water mark above the live bytes present when the
// scope was opened. Only one scope should be active at a time.
class AllocScope {
 public:
  AllocScope() noexcept;
  std::size_t peak_above_baseline() const noexcept;

 private:
  std::size_t baseline_;
};

}  // namespace edgetsn
