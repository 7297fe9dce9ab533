#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "freeaccess/node_pool.hpp"

namespace freeaccess {

/// Hazard-pointer reclamation over an arena.
class HazardDomain {
 public:
  static constexpr std::size_t kDefaultSlots = 3;

  HazardDomain(Arena& arena, std::size_t max_threads, std::size_t threshold,
               std::size_t slots = kDefaultSlots);

  std::size_t slots() const noexcept { return slots_; }
  std::size_t threshold() const noexcept { return threshold_; }

  /// Loads cell, publishes the untagged value in slot i, and reloads until
  /// both loads agree. Returns the (possibly tagged) protected value.
  std::uint64_t read(std::size_t tid, const std::uint64_t& cell, std::size_t i) noexcept {
    std::uint64_t v = load_word(cell);
    for (;;) {
      if (clear_tag(v) == kNullRef) return v;
      store_word(slot(tid, i), clear_tag(v), std::memory_order_seq_cst);
      std::uint64_t again = load_word(cell, std::memory_order_seq_cst);
      if (again == v) return v;
      v = again;
    }
  }
  /// Moves an already protected value into another slot.
  void copy(std::size_t tid, std::size_t from, std::size_t to) noexcept {
    store_word(slot(tid, to), load_word(slot(tid, from), std::memory_order_relaxed),
               std::memory_order_release);
  }
  void set(std::size_t tid, std::size_t i, std::uint64_t v) noexcept {
    store_word(slot(tid, i), clear_tag(v), std::memory_order_seq_cst);
  }
  void clear(std::size_t tid) noexcept;

  /// Appends node to tid's retired list; scans when the list hits the threshold.
  void retire(std::size_t tid, NodeRef node);
  /// Frees every retired node of tid not present in any slot; returns count.
  std::size_t scan(std::size_t tid);

  std::size_t retired_count(std::size_t tid) const noexcept { return threads_[tid].retired.size(); }
  std::size_t pending() const noexcept;
  std::uint64_t scans() const noexcept { return scans_.load(std::memory_order_acquire); }
  std::uint64_t reclaimed() const noexcept { return reclaimed_.load(std::memory_order_acquire); }

 private:
  struct alignas(64) PerThread {
    std::vector<std::uint64_t> retired;
  };
  std::uint64_t& slot(std::size_t tid, std::size_t i) noexcept { return hazards_[tid * stride_ + i]; }

  Arena& arena_;
  std::size_t max_threads_;
  std::size_t threshold_;
  std::size_t slots_;
  std::size_t stride_;
  std::unique_ptr<std::uint64_t[]> hazards_;
  std::unique_ptr<PerThread[]> threads_;
  std::atomic<std::uint64_t> scans_{0};
  std::atomic<std::uint64_t> reclaimed_{0};
};

/// Epoch-based reclamation with three limbo generations.
class EpochDomain {
 public:
  EpochDomain(Arena& arena, std::size_t max_threads);

  void enter(std::size_t tid) noexcept;
  void exit(std::size_t tid) noexcept;
  /// Labels node with the current global epoch; it is freed once the global
  /// epoch has moved two past that label.
  void retire(std::size_t tid, NodeRef node);
  /// Advances the global epoch if every active thread announced it.
  bool try_advance() noexcept;
  /// Frees tid's limbo generations that are at least two epochs old.
  std::size_t collect(std::size_t tid);

  std::uint64_t epoch() const noexcept { return global_.load(std::memory_order_acquire); }
  std::uint64_t advances() const noexcept { return advances_.load(std::memory_order_acquire); }
  std::uint64_t reclaimed() const noexcept { return reclaimed_.load(std::memory_order_acquire); }
  std::size_t pending() const noexcept;

 private:
  struct alignas(64) PerThread {
    std::atomic<std::uint64_t> state{0};  // epoch << 1 | active
    std::vector<std::uint64_t> limbo[3];
    std::uint64_t label[3] = {0, 0, 0};
    std::size_t ops = 0;
  };

  Arena& arena_;
  std::size_t max_threads_;
  std::unique_ptr<PerThread[]> threads_;
  alignas(64) std::atomic<std::uint64_t> global_{2};
  std::atomic<std::uint64_t> advances_{0};
  std::atomic<std::uint64_t> reclaimed_{0};
};

}  // namespace freeaccess
