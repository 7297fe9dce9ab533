#include "freeaccess/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace freeaccess {

HazardDomain::HazardDomain(Arena& arena, std::size_t max_threads, std::size_t threshold,
                           std::size_t slots)
    : arena_(arena),
      max_threads_(max_threads),
      threshold_(std::max<std::size_t>(threshold, 1)),
      slots_(slots),
      // Pad each thread's slots to a cache line.
      stride_((slots + 7) / 8 * 8),
      hazards_(std::make_unique<std::uint64_t[]>(max_threads * ((slots + 7) / 8 * 8))),
      threads_(std::make_unique<PerThread[]>(max_threads)) {
  if (slots_ == 0 || max_threads_ == 0) throw std::invalid_argument("hazard domain needs slots and threads");
}

void HazardDomain::clear(std::size_t tid) noexcept {
  for (std::size_t i = 0; i < slots_; ++i) store_word(slot(tid, i), kNullRef, std::memory_order_release);
}

void HazardDomain::retire(std::size_t tid, NodeRef node) {
  auto& retired = threads_[tid].retired;
  retired.push_back(node.raw());
  if (retired.size() >= threshold_) scan(tid);
}

std::size_t HazardDomain::scan(std::size_t tid) {
  std::atomic_thread_fence(std::memory_order_seq_cst);
  std::vector<std::uint64_t> protect;
  protect.reserve(max_threads_ * slots_);
  for (std::size_t t = 0; t < max_threads_; ++t) {
    for (std::size_t i = 0; i < slots_; ++i) {
      std::uint64_t v = load_word(slot(t, i));
      if (v != kNullRef) protect.push_back(v);
    }
  }
  std::sort(protect.begin(), protect.end());
  auto& retired = threads_[tid].retired;
  std::size_t kept = 0;
  std::size_t freed = 0;
  for (std::uint64_t n : retired) {
    if (std::binary_search(protect.begin(), protect.end(), n)) {
      retired[kept++] = n;
    } else {
      arena_.release(NodeRef(n));
      ++freed;
    }
  }
  retired.resize(kept);
  scans_.fetch_add(1, std::memory_order_acq_rel);
  reclaimed_.fetch_add(freed, std::memory_order_acq_rel);
  return freed;
}

std::size_t HazardDomain::pending() const noexcept {
  std::size_t n = 0;
  for (std::size_t t = 0; t < max_threads_; ++t) n += threads_[t].retired.size();
  return n;
}

EpochDomain::EpochDomain(Arena& arena, std::size_t max_threads)
    : arena_(arena), max_threads_(max_threads), threads_(std::make_unique<PerThread[]>(max_threads)) {
  if (max_threads_ == 0) throw std::invalid_argument("epoch domain needs threads");
}

void EpochDomain::enter(std::size_t tid) noexcept {
  PerThread& me = threads_[tid];
  me.state.store((global_.load(std::memory_order_acquire) << 1) | 1, std::memory_order_seq_cst);
  // Re-announce if the epoch moved between the load and the store.
  for (;;) {
    std::uint64_t g = global_.load(std::memory_order_seq_cst);
    if ((me.state.load(std::memory_order_relaxed) >> 1) == g) break;
    me.state.store((g << 1) | 1, std::memory_order_seq_cst);
  }
  try_advance();
  collect(tid);
}

void EpochDomain::exit(std::size_t tid) noexcept {
  threads_[tid].state.store(0, std::memory_order_release);
}

bool EpochDomain::try_advance() noexcept {
  std::uint64_t g = global_.load(std::memory_order_seq_cst);
  for (std::size_t t = 0; t < max_threads_; ++t) {
    std::uint64_t s = threads_[t].state.load(std::memory_order_seq_cst);
    if ((s & 1) != 0 && (s >> 1) != g) return false;
  }
  if (global_.compare_exchange_strong(g, g + 1, std::memory_order_seq_cst)) {
    advances_.fetch_add(1, std::memory_order_acq_rel);
    return true;
  }
  return false;
}

std::size_t EpochDomain::collect(std::size_t tid) {
  PerThread& me = threads_[tid];
  std::uint64_t g = global_.load(std::memory_order_acquire);
  std::size_t freed = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    if (me.limbo[b].empty() || me.label[b] + 2 > g) continue;
    for (std::uint64_t n : me.limbo[b]) arena_.release(NodeRef(n));
    freed += me.limbo[b].size();
    me.limbo[b].clear();
  }
  if (freed != 0) reclaimed_.fetch_add(freed, std::memory_order_acq_rel);
  return freed;
}

void EpochDomain::retire(std::size_t tid, NodeRef node) {
  PerThread& me = threads_[tid];
  std::uint64_t g = global_.load(std::memory_order_acquire);
  std::size_t b = g % 3;
  if (me.label[b] != g) {
    // The bucket holds nodes from epoch g - 3 or older: safe to free now.
    if (!me.limbo[b].empty()) {
      for (std::uint64_t n : me.limbo[b]) arena_.release(NodeRef(n));
      reclaimed_.fetch_add(me.limbo[b].size(), std::memory_order_acq_rel);
      me.limbo[b].clear();
    }
    me.label[b] = g;
  }
  me.limbo[b].push_back(node.raw());
}

std::size_t EpochDomain::pending() const noexcept {
  std::size_t n = 0;
  for (std::size_t t = 0; t < max_threads_; ++t) {
    for (const auto& l : threads_[t].limbo) n += l.size();
  }
  return n;
}

}  // namespace freeaccess
