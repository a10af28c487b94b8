// Copyright 2026 The cmtrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <new>

namespace cmtrack::numerics {

/// Per-thread counters for tensor storage. Every Tensor buffer is allocated
/// through CountingAllocator, so these numbers are the resident tensor bytes
/// of whatever runs on the calling thread.
struct MemoryCounters {
  std::int64_t live_bytes = 0;
  std::int64_t peak_bytes = 0;
  std::uint64_t allocations = 0;
};

class MemoryProbe {
 public:
  static const MemoryCounters& counters() noexcept { return state(); }
  static std::int64_t live_bytes() noexcept { return state().live_bytes; }
  static std::int64_t peak_bytes() noexcept { return state().peak_bytes; }
  static std::uint64_t allocations() noexcept { return state().allocations; }

  /// Restart peak tracking from the current live size.
  static void reset_peak() noexcept {
    state().peak_bytes = state().live_bytes;
    state().allocations = 0;
  }

  static void on_allocate(std::size_t bytes) noexcept {
    auto& s = state();
    s.live_bytes += static_cast<std::int64_t>(bytes);
    s.allocations += 1;
    if (s.live_bytes > s.peak_bytes) s.peak_bytes = s.live_bytes;
  }

  static void on_deallocate(std::size_t bytes) noexcept {
    state().live_bytes -= static_cast<std::int64_t>(bytes);
  }

 private:
  static MemoryCounters& state() noexcept {
    thread_local MemoryCounters counters;
    return counters;
  }
};

template <typename T>
struct CountingAllocator {
  using value_type = T;

  CountingAllocator() noexcept = default;
  template <typename U>
  CountingAllocator(const CountingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    auto* p = static_cast<T*>(::operator new(n * sizeof(T)));
    MemoryProbe::on_allocate(n * sizeof(T));
    return p;
  }

  void deallocate(T* p, std::size_t n) noexcept {
    MemoryProbe::on_deallocate(n * sizeof(T));
    ::operator delete(p);
  }

  template <typename U>
  bool operator==(const CountingAllocator<U>&) const noexcept {
    return true;
  }
};

}  // namespace cmtrack::numerics
