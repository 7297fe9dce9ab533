#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace freeaccess {

/// Low bit of a link word: the node holding the link is logically deleted.
inline constexpr std::uint64_t kTagBits = 1;
inline constexpr std::uint64_t kNullRef = 0;

/// Fill pattern for reclaimed nodes in poison mode. It is odd (so never a
/// node address), lies far above any user-space mapping, and as a signed key
/// it is negative, outside every benchmark key range.
inline constexpr std::uint64_t kPoison = 0xDEADBEEFDEADBEEFull;

constexpr std::uint64_t clear_tag(std::uint64_t link) noexcept { return link & ~kTagBits; }
constexpr bool is_tagged(std::uint64_t link) noexcept { return (link & kTagBits) != 0; }
constexpr std::uint64_t with_tag(std::uint64_t link) noexcept { return link | kTagBits; }

/// Shared words are plain 64-bit storage accessed through std::atomic_ref, so
/// arena memory can come straight from calloc and stay untouched until used.
inline std::atomic_ref<std::uint64_t> atomic_word(std::uint64_t& w) noexcept {
  return std::atomic_ref<std::uint64_t>(w);
}

inline std::uint64_t load_word(const std::uint64_t& w,
                               std::memory_order order = std::memory_order_acquire) noexcept {
  return std::atomic_ref<std::uint64_t>(const_cast<std::uint64_t&>(w)).load(order);
}

inline void store_word(std::uint64_t& w, std::uint64_t v,
                       std::memory_order order = std::memory_order_release) noexcept {
  std::atomic_ref<std::uint64_t>(w).store(v, order);
}

inline bool cas_word(std::uint64_t& w, std::uint64_t expected, std::uint64_t desired,
                     std::memory_order order = std::memory_order_acq_rel) noexcept {
  return std::atomic_ref<std::uint64_t>(w).compare_exchange_strong(expected, desired, order,
                                                                   std::memory_order_acquire);
}

/// Handle to one node slot: the untagged address of its first word.
class NodeRef {
 public:
  constexpr NodeRef() noexcept = default;
  constexpr explicit NodeRef(std::uint64_t addr) noexcept : addr_(addr) {}

  static constexpr NodeRef from_link(std::uint64_t link) noexcept { return NodeRef(clear_tag(link)); }

  constexpr std::uint64_t raw() const noexcept { return addr_; }
  constexpr bool is_null() const noexcept { return addr_ == kNullRef; }
  constexpr explicit operator bool() const noexcept { return !is_null(); }

  std::uint64_t& word(std::size_t i) const noexcept {
    return reinterpret_cast<std::uint64_t*>(addr_)[i];
  }

  friend constexpr bool operator==(NodeRef, NodeRef) noexcept = default;
  friend constexpr auto operator<=>(NodeRef, NodeRef) noexcept = default;

 private:
  std::uint64_t addr_ = kNullRef;
};

/// Node shape reported by the data-structure author: size and the byte
/// offsets of fields that reference other nodes of the same arena.
struct NodeLayout {
  std::size_t node_size = 0;
  std::vector<std::size_t> link_offsets;

  std::size_t words() const noexcept { return node_size / sizeof(std::uint64_t); }
  /// Throws std::invalid_argument when the layout is unusable.
  void validate() const;
};

class ArenaExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-capacity node pool with a side mark table.
///
/// Storage is mapped once and never returned while the arena lives, so a load
/// through any NodeRef ever handed out cannot fault; after reclamation it just
/// returns unspecified bytes.
///
/// Every node has one state word in the mark table:
///   bit 0      allocated
///   bit 1      scanned (black) in the phase held above
///   bits 2..63 phase index of the last mark or allocation stamp
/// The phase field never decreases.
///
/// Free nodes are the intrusive Treiber stack (index links in a side array,
/// versioned head) plus the never-touched suffix [high_water, capacity).
class Arena {
 public:
  static constexpr std::size_t kSweepChunk = 1024;

  Arena(std::size_t capacity, NodeLayout layout);
  ~Arena();
  Arena(const Arena&) = delete;
  Arena& operator=(const Arena&) = delete;

  std::size_t capacity() const noexcept { return capacity_; }
  const NodeLayout& layout() const noexcept { return layout_; }

  bool poison_mode() const noexcept { return poison_; }
  void set_poison_mode(bool on) noexcept { poison_ = on; }

  // -- global roots (setup period only) --
  void register_global_root(std::uint64_t& cell);
  void register_global_roots(std::span<std::uint64_t> cells);
  /// Appends the current value of every registered cell that holds a node.
  void gather_global_roots(std::vector<std::uint64_t>& out) const;
  std::size_t global_root_cells() const noexcept;

  // -- addressing --
  /// True iff addr is the start of one of this arena's node slots.
  bool owns(std::uint64_t addr) const noexcept;
  /// True iff addr points anywhere inside the storage block.
  bool within(std::uint64_t addr) const noexcept { return addr - base_ < bytes_; }
  std::size_t index_of(NodeRef node) const noexcept { return (node.raw() - base_) / layout_.node_size; }
  NodeRef node_at(std::size_t index) const noexcept {
    return NodeRef(base_ + index * layout_.node_size);
  }
  /// Node whose storage contains addr (addr must satisfy within()).
  NodeRef node_containing(std::uint64_t addr) const noexcept {
    return node_at((addr - base_) / layout_.node_size);
  }

  // -- allocation --
  /// Pops a free node and stamps it allocated with max(current, stamp_phase).
  std::optional<NodeRef> try_pop(std::uint64_t stamp_phase) noexcept;
  /// Explicit free, used by the retire-based schemes.
  void release(NodeRef node) noexcept;
  std::size_t free_count() const noexcept;
  std::size_t high_water() const noexcept { return bump_.load(std::memory_order_acquire); }
  /// Counts allocated state words. Exact only at quiescence.
  std::size_t allocated_count() const noexcept;
  /// Free-stack length plus untouched suffix, by walking the stack. Quiescent only.
  std::size_t walk_free_list() const;

  // -- mark table --
  std::uint64_t state(std::size_t index) const noexcept { return load_word(state_[index]); }
  static constexpr bool state_allocated(std::uint64_t s) noexcept { return (s & 1) != 0; }
  static constexpr bool state_scanned(std::uint64_t s) noexcept { return (s & 2) != 0; }
  static constexpr std::uint64_t state_phase(std::uint64_t s) noexcept { return s >> 2; }

  bool is_allocated(NodeRef node) const noexcept { return state_allocated(state(index_of(node))); }
  std::uint64_t mark_phase(NodeRef node) const noexcept { return state_phase(state(index_of(node))); }

  /// Advances an allocated node's mark to phase; true iff this call did it.
  bool mark_node(NodeRef node, std::uint64_t phase) noexcept;
  /// Records that all children of a node marked in phase were marked.
  void set_scanned(std::size_t index, std::uint64_t phase) noexcept;

  /// Reclaims every allocated node whose mark is older than phase.
  std::size_t sweep(std::uint64_t phase);
  /// Same, restricted to index range [begin, end). Safe to race with other
  /// sweepers of the same or older phases: each node is freed by one CAS.
  std::size_t sweep_range(std::size_t begin, std::size_t end, std::uint64_t phase);
  std::size_t chunk_count() const noexcept { return (capacity_ + kSweepChunk - 1) / kSweepChunk; }

  /// Per-chunk sweep bookkeeping, stamped with phase indices.
  std::uint64_t& chunk_claim(std::size_t chunk) noexcept { return chunk_claim_[chunk]; }
  std::uint64_t& chunk_done(std::size_t chunk) noexcept { return chunk_done_[chunk]; }

 private:
  void push_free(std::size_t index) noexcept;
  void poison_node(std::size_t index) noexcept;

  std::size_t capacity_;
  NodeLayout layout_;
  std::size_t bytes_;
  std::uint64_t* storage_ = nullptr;
  std::uint64_t base_ = 0;
  std::uint64_t* state_ = nullptr;
  std::uint32_t* free_next_ = nullptr;
  std::vector<std::uint64_t> chunk_claim_;
  std::vector<std::uint64_t> chunk_done_;
  bool poison_ = false;

  alignas(64) std::atomic<std::uint64_t> free_head_{0};
  alignas(64) std::atomic<std::uint64_t> bump_{0};
  alignas(64) std::atomic<std::int64_t> stacked_{0};

  std::vector<std::span<std::uint64_t>> roots_;
};

}  // namespace freeaccess
