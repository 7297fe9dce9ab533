#include "freeaccess/node_pool.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <limits>

namespace freeaccess {

namespace {

// Free-list head: version in the high half, index + 1 in the low half (0 = empty).
constexpr std::uint64_t pack_head(std::uint64_t version, std::uint64_t slot) noexcept {
  return (version << 32) | slot;
}
constexpr std::uint32_t head_slot(std::uint64_t head) noexcept {
  return static_cast<std::uint32_t>(head);
}
constexpr std::uint64_t head_version(std::uint64_t head) noexcept { return head >> 32; }

constexpr std::uint64_t kAllocatedBit = 1;
constexpr std::uint64_t kScannedBit = 2;

std::atomic_ref<std::uint32_t> link_ref(std::uint32_t& w) noexcept {
  return std::atomic_ref<std::uint32_t>(w);
}

}  // namespace

void NodeLayout::validate() const {
  constexpr std::size_t w = sizeof(std::uint64_t);
  if (node_size == 0 || node_size % w != 0) {
    throw std::invalid_argument("node_size must be a positive multiple of 8 bytes");
  }
  for (std::size_t off : link_offsets) {
    if (off >= node_size || off % w != 0) {
      throw std::invalid_argument("link offset " + std::to_string(off) +
                                  " is not a word-aligned offset inside the node");
    }
  }
}

Arena::Arena(std::size_t capacity, NodeLayout layout)
    : capacity_(capacity), layout_(std::move(layout)) {
  if (capacity_ == 0) throw std::invalid_argument("arena capacity must be at least 1");
  if (capacity_ >= (std::size_t{1} << 32) - 1) {
    throw std::invalid_argument("arena capacity must fit a 32-bit index");
  }
  layout_.validate();
  std::sort(layout_.link_offsets.begin(), layout_.link_offsets.end());
  layout_.link_offsets.erase(std::unique(layout_.link_offsets.begin(), layout_.link_offsets.end()),
                             layout_.link_offsets.end());

  // calloc keeps untouched pages lazily zeroed, so a big leaky pool only
  // costs what the run actually uses.
  bytes_ = capacity_ * layout_.node_size;
  storage_ = static_cast<std::uint64_t*>(std::calloc(capacity_, layout_.node_size));
  state_ = static_cast<std::uint64_t*>(std::calloc(capacity_, sizeof(std::uint64_t)));
  free_next_ = static_cast<std::uint32_t*>(std::calloc(capacity_, sizeof(std::uint32_t)));
  if (storage_ == nullptr || state_ == nullptr || free_next_ == nullptr) {
    std::free(storage_);
    std::free(state_);
    std::free(free_next_);
    throw std::bad_alloc();
  }
  base_ = reinterpret_cast<std::uint64_t>(storage_);
  chunk_claim_.assign(chunk_count(), 0);
  chunk_done_.assign(chunk_count(), 0);
}

Arena::~Arena() {
  std::free(storage_);
  std::free(state_);
  std::free(free_next_);
}

void Arena::register_global_root(std::uint64_t& cell) {
  register_global_roots(std::span<std::uint64_t>(&cell, 1));
}

void Arena::register_global_roots(std::span<std::uint64_t> cells) {
  for (const auto& r : roots_) {
    if (r.data() == cells.data() && r.size() == cells.size()) return;
  }
  roots_.push_back(cells);
}

void Arena::gather_global_roots(std::vector<std::uint64_t>& out) const {
  for (const auto& span : roots_) {
    for (std::uint64_t& cell : span) {
      std::uint64_t v = clear_tag(load_word(cell));
      if (v != kNullRef) out.push_back(v);
    }
  }
}

std::size_t Arena::global_root_cells() const noexcept {
  std::size_t n = 0;
  for (const auto& span : roots_) n += span.size();
  return n;
}

bool Arena::owns(std::uint64_t addr) const noexcept {
  std::uint64_t off = addr - base_;
  return off < bytes_ && off % layout_.node_size == 0;
}

std::optional<NodeRef> Arena::try_pop(std::uint64_t stamp_phase) noexcept {
  std::size_t index;
  std::uint64_t head = free_head_.load(std::memory_order_acquire);
  for (;;) {
    std::uint32_t slot = head_slot(head);
    if (slot == 0) {
      std::uint64_t cursor = bump_.load(std::memory_order_relaxed);
      bool taken = false;
      while (cursor < capacity_) {
        if (bump_.compare_exchange_weak(cursor, cursor + 1, std::memory_order_acq_rel)) {
          taken = true;
          break;
        }
      }
      if (!taken) {
        // A release may have refilled the stack while we looked at the suffix.
        head = free_head_.load(std::memory_order_acquire);
        if (head_slot(head) == 0) return std::nullopt;
        continue;
      }
      index = cursor;
      break;
    }
    std::uint32_t next = link_ref(free_next_[slot - 1]).load(std::memory_order_relaxed);
    if (free_head_.compare_exchange_weak(head, pack_head(head_version(head) + 1, next),
                                         std::memory_order_acq_rel, std::memory_order_acquire)) {
      index = slot - 1;
      stacked_.fetch_sub(1, std::memory_order_relaxed);
      break;
    }
  }

  // New nodes count as already scanned in the stamp phase: whatever they will
  // link to is held by the allocating thread's published frame.
  std::uint64_t& st = state_[index];
  std::uint64_t cur = load_word(st);
  std::uint64_t phase = std::max(state_phase(cur), stamp_phase);
  store_word(st, (phase << 2) | kScannedBit | kAllocatedBit, std::memory_order_seq_cst);
  return node_at(index);
}

void Arena::push_free(std::size_t index) noexcept {
  std::uint64_t head = free_head_.load(std::memory_order_acquire);
  for (;;) {
    link_ref(free_next_[index]).store(head_slot(head), std::memory_order_relaxed);
    if (free_head_.compare_exchange_weak(head,
                                         pack_head(head_version(head) + 1, index + 1),
                                         std::memory_order_acq_rel, std::memory_order_acquire)) {
      break;
    }
  }
  stacked_.fetch_add(1, std::memory_order_relaxed);
}

void Arena::poison_node(std::size_t index) noexcept {
  NodeRef n = node_at(index);
  for (std::size_t i = 0; i < layout_.words(); ++i) {
    store_word(n.word(i), kPoison, std::memory_order_relaxed);
  }
}

void Arena::release(NodeRef node) noexcept {
  std::size_t index = index_of(node);
  std::uint64_t& st = state_[index];
  std::uint64_t cur = load_word(st);
  store_word(st, cur & ~(kAllocatedBit | kScannedBit), std::memory_order_release);
  if (poison_) poison_node(index);
  push_free(index);
}

std::size_t Arena::free_count() const noexcept {
  std::int64_t stacked = stacked_.load(std::memory_order_relaxed);
  std::size_t untouched = capacity_ - std::min<std::size_t>(capacity_, high_water());
  return untouched + static_cast<std::size_t>(std::max<std::int64_t>(0, stacked));
}

std::size_t Arena::allocated_count() const noexcept {
  std::size_t n = 0;
  std::size_t hw = std::min(capacity_, high_water());
  for (std::size_t i = 0; i < hw; ++i) n += state_allocated(state(i)) ? 1 : 0;
  return n;
}

std::size_t Arena::walk_free_list() const {
  std::size_t n = capacity_ - std::min(capacity_, high_water());
  std::uint32_t slot = head_slot(free_head_.load(std::memory_order_acquire));
  while (slot != 0) {
    if (++n > capacity_) throw std::logic_error("free list is cyclic");
    slot = link_ref(free_next_[slot - 1]).load(std::memory_order_relaxed);
  }
  return n;
}

bool Arena::mark_node(NodeRef node, std::uint64_t phase) noexcept {
  std::uint64_t& st = state_[index_of(node)];
  std::uint64_t cur = load_word(st, std::memory_order_seq_cst);
  while (state_allocated(cur) && state_phase(cur) < phase) {
    if (atomic_word(st).compare_exchange_weak(cur, (phase << 2) | kAllocatedBit,
                                              std::memory_order_seq_cst)) {
      return true;
    }
  }
  return false;
}

void Arena::set_scanned(std::size_t index, std::uint64_t phase) noexcept {
  std::uint64_t& st = state_[index];
  std::uint64_t want = (phase << 2) | kAllocatedBit;
  std::uint64_t expected = want;
  atomic_word(st).compare_exchange_strong(expected, want | kScannedBit, std::memory_order_seq_cst);
}

std::size_t Arena::sweep_range(std::size_t begin, std::size_t end, std::uint64_t phase) {
  end = std::min(end, std::min(capacity_, high_water()));
  std::size_t reclaimed = 0;
  for (std::size_t i = begin; i < end; ++i) {
    std::uint64_t& st = state_[i];
    std::uint64_t cur = load_word(st, std::memory_order_seq_cst);
    if (!state_allocated(cur) || state_phase(cur) >= phase) continue;
    if (!atomic_word(st).compare_exchange_strong(cur, cur & ~(kAllocatedBit | kScannedBit),
                                                 std::memory_order_seq_cst)) {
      continue;
    }
    if (poison_) poison_node(i);
    push_free(i);
    ++reclaimed;
  }
  return reclaimed;
}

std::size_t Arena::sweep(std::uint64_t phase) { return sweep_range(0, capacity_, phase); }

}  // namespace freeaccess
