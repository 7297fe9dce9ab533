#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "freeaccess/node_pool.hpp"
#include "freeaccess/tracer.hpp"

namespace freeaccess {

inline constexpr std::size_t kSlotsPerFrame = 7;
inline constexpr std::uint64_t kMarker = ~std::uint64_t{0};
inline constexpr std::uint64_t kMaxPhase = (std::uint64_t{1} << 56) - 1;

// Arbiter values: base offsets of frame 0 and frame 1 inside the record.
inline constexpr std::uint64_t kArbiterFirst = 1;
inline constexpr std::uint64_t kArbiterSecond = 9;

constexpr std::uint64_t encode(bool dirty, std::uint64_t phase) noexcept {
  return (phase << 8) | (dirty ? 1u : 0u);
}

struct DirtyPhase {
  bool dirty = false;
  std::uint64_t phase = 0;
  friend constexpr bool operator==(DirtyPhase, DirtyPhase) noexcept = default;
};

constexpr DirtyPhase decode(std::uint64_t word) noexcept { return {(word & 1) != 0, word >> 8}; }

constexpr std::uint64_t flip_arbiter(std::uint64_t ar) noexcept { return ar ^ 8; }
constexpr std::size_t frame_index(std::uint64_t ar) noexcept { return ar >> 3; }

/// Seeded bugs used to prove the safety detectors can fail.
enum class Mutation { kNone, kSkipValidate, kSkipFence, kSkipMarker };

struct RuntimeConfig {
  std::size_t max_threads = 64;
  /// Certify loaded values against the poison pattern and log illegal writes.
  bool audit = false;
  Mutation mutation = Mutation::kNone;
};

/// Per-thread shared state on two cache lines:
///   words[0]      dirty/phase
///   words[1..7]   frame 0
///   words[9..15]  frame 1 (words[9] holds the marker between operations)
struct alignas(64) ThreadRecord {
  std::uint64_t words[16] = {};
  std::atomic<std::uint64_t> signal_writes{0};
  std::atomic<bool> in_use{false};

  std::uint64_t& dirty_phase() noexcept { return words[0]; }
  std::uint64_t& slot(std::uint64_t ar, std::size_t i) noexcept { return words[ar + i]; }
  bool idle() const noexcept { return load_word(words[kArbiterSecond]) == kMarker; }
};

enum class ProbePoint { kStep, kTraversal, kWriteOnlyEntry };

class ExecutionContext;

struct ProbeEvent {
  ProbePoint point;
  int label;
  ExecutionContext* ctx;  // null for the retire-based schemes
};

/// Test hook called at labeled program points (suspension, restart injection).
class ExecutionHook {
 public:
  virtual ~ExecutionHook() = default;
  virtual void on_probe(const ProbeEvent& event) = 0;
};

class Runtime;

/// Control decision returned by one step of a restartable operation.
struct Step {
  enum class Kind : std::uint8_t { kNext, kRestart, kDone };
  Kind kind = Kind::kDone;
  int label = 0;

  static constexpr Step next(int label) noexcept { return {Kind::kNext, label}; }
  static constexpr Step restart() noexcept { return {Kind::kRestart, 0}; }
  static constexpr Step done() noexcept { return {Kind::kDone, 0}; }
};

struct ContextStats {
  std::uint64_t operations = 0;
  std::uint64_t restarts = 0;
  std::uint64_t write_only_periods = 0;
  std::uint64_t shared_writes = 0;
  std::uint64_t certified_poison = 0;
  std::uint64_t writes_outside_period = 0;
  std::uint64_t writes_to_free_nodes = 0;
  std::uint64_t phases_initiated = 0;
};

/// A registered thread's handle for running restartable operations.
class ExecutionContext {
 public:
  static constexpr std::size_t kCheckpointBytes = 64;

  ExecutionContext(Runtime& rt, ThreadRecord& rec, std::size_t tid);
  ~ExecutionContext();
  ExecutionContext(const ExecutionContext&) = delete;
  ExecutionContext& operator=(const ExecutionContext&) = delete;

  Runtime& runtime() noexcept { return rt_; }
  ThreadRecord& record() noexcept { return rec_; }
  std::size_t tid() const noexcept { return tid_; }
  std::uint64_t arbiter() const noexcept { return ar_; }
  bool in_operation() const noexcept { return in_op_; }
  bool in_write_only() const noexcept { return in_write_only_; }
  const ContextStats& stats() const noexcept { return stats_; }

  std::uint64_t& ref(std::size_t i) noexcept { return refs_[i]; }
  std::uint64_t ref(std::size_t i) const noexcept { return refs_[i]; }

  // -- operation lifecycle --
  void op_begin(std::span<const std::uint64_t> ref_inputs, void* locals, std::size_t locals_size,
                int entry, std::size_t ref_count);
  void op_end();

  // -- periods --
  /// Publishes live refs to the inactive frame, fences, checks dirty.
  /// Returns false when the caller must restart.
  bool begin_write_only();
  void end_write_only(int resume);
  /// Returns false when the preceding loads must not be used (restart).
  bool validate_read() noexcept {
    std::atomic_thread_fence(std::memory_order_acquire);
    if (is_dirty()) [[unlikely]] {
      return mutation_ == Mutation::kSkipValidate;
    }
    return true;
  }
  bool is_dirty() const noexcept { return (load_word(rec_.words[0]) & 1) != 0; }

  /// Relaxed load plus validation. In audit mode a certified poison value is
  /// counted and turned into a restart so the caller never follows it.
  bool guarded_load(const std::uint64_t& cell, std::uint64_t& out) noexcept {
    out = load_word(cell, std::memory_order_relaxed);
    if (!validate_read()) return false;
    if (audit_) [[unlikely]] return certify(out);
    return true;
  }
  bool guarded_load_pair(const std::uint64_t& a, const std::uint64_t& b, std::uint64_t& va,
                         std::uint64_t& vb) noexcept {
    va = load_word(a, std::memory_order_relaxed);
    vb = load_word(b, std::memory_order_relaxed);
    if (!validate_read()) return false;
    if (audit_) [[unlikely]] return certify(va) && certify(vb);
    return true;
  }

  /// Clears dirty after helping, restores refs and locals; returns resume label.
  int restart();
  /// Helps the signaled phase and clears dirty; no state restoration. For
  /// use between operations.
  void settle();

  // -- shared writes (write-only periods only) --
  bool cas(std::uint64_t& cell, std::uint64_t expected, std::uint64_t desired) noexcept {
    if (audit_) [[unlikely]] audit_write(&cell);
    ++stats_.shared_writes;
    return cas_word(cell, expected, desired, std::memory_order_seq_cst);
  }
  /// Store into a node that is not yet reachable.
  void init_store(std::uint64_t& cell, std::uint64_t value) noexcept {
    if (audit_) [[unlikely]] audit_write(&cell);
    ++stats_.shared_writes;
    store_word(cell, value, std::memory_order_relaxed);
  }

  // -- allocation --
  /// Pops a node; on an empty pool runs a reclamation phase and returns
  /// nullopt, after which the caller must restart. Throws ArenaExhausted
  /// after two phases in a row free nothing.
  std::optional<NodeRef> alloc(Arena& arena);

  // -- test plumbing --
  void set_hook(ExecutionHook* hook) noexcept { hook_ = hook; }
  ExecutionHook* hook() const noexcept { return hook_; }
  void probe(ProbePoint point, int label) {
    if (hook_ != nullptr) [[unlikely]] hook_->on_probe({point, label, this});
  }
  /// Raises this thread's own dirty flag so its next check restarts.
  void inject_restart() noexcept;

  std::uint64_t last_seen_phase() const noexcept { return last_seen_; }
  void set_last_seen_phase(std::uint64_t p) noexcept { last_seen_ = p; }

 private:
  friend class Runtime;

  bool certify(std::uint64_t v) noexcept;
  void audit_write(const std::uint64_t* cell) noexcept;
  void publish(std::uint64_t ar_target) noexcept;

  Runtime& rt_;
  ThreadRecord& rec_;
  std::size_t tid_;
  bool audit_;
  Mutation mutation_;
  ExecutionHook* hook_ = nullptr;

  std::uint64_t ar_ = kArbiterFirst;
  std::array<std::uint64_t, kSlotsPerFrame> refs_{};
  std::size_t ref_count_ = 0;
  bool in_op_ = false;
  bool in_write_only_ = false;
  bool published_ = false;
  void* locals_ = nullptr;
  std::size_t locals_size_ = 0;
  alignas(16) std::array<std::byte, kCheckpointBytes> checkpoint_{};
  int resume_ = 0;

  std::uint64_t last_seen_ = 0;
  std::uint64_t empty_streak_ = 0;
  ContextStats stats_;
};

/// Global phase counter, thread registry, and the phase driver.
class Runtime final : public PhaseHooks {
 public:
  explicit Runtime(RuntimeConfig config = {});
  ~Runtime() override;
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  const RuntimeConfig& config() const noexcept { return config_; }

  /// Setup only: every node reference lives in one of these arenas.
  void attach(Arena& arena);
  const std::vector<Arena*>& arenas() const noexcept { return tracer_.arenas(); }
  Arena* arena_of(std::uint64_t addr) const noexcept;

  /// Claims a free record. Throws std::runtime_error when all are in use.
  std::unique_ptr<ExecutionContext> register_thread();
  std::size_t registered() const noexcept { return high_water_.load(std::memory_order_acquire); }
  ThreadRecord& record(std::size_t tid) noexcept { return records_[tid]; }

  std::uint64_t phase() const noexcept { return phase_.load(std::memory_order_seq_cst); }
  Tracer& tracer() noexcept { return tracer_; }
  const Tracer& tracer() const noexcept { return tracer_; }

  /// Advances the global phase by at most one from ctx's last seen value and
  /// signals every thread; returns the phase index now current.
  std::uint64_t init_reclamation(ExecutionContext& ctx);
  /// Runs (or helps) one full reclamation phase; returns its index.
  std::uint64_t reclamation_phase(ExecutionContext& ctx);
  /// Blocking allocation for setup code outside operations.
  NodeRef allocate(ExecutionContext& ctx, Arena& arena);

  void signal_all(std::uint64_t phase) override;
  void gather_roots(std::vector<std::uint64_t>& out) override;
  void gather_local_roots(std::vector<std::uint64_t>& out);

  /// Totals over every context, including ones already released.
  struct AuditTotals {
    std::atomic<std::uint64_t> certified_poison{0};
    std::atomic<std::uint64_t> writes_outside_period{0};
    std::atomic<std::uint64_t> writes_to_free_nodes{0};
    std::atomic<std::uint64_t> restarts{0};
  };
  const AuditTotals& audit_totals() const noexcept { return audit_; }

 private:
  friend class ExecutionContext;
  void release(ThreadRecord& rec) noexcept;

  RuntimeConfig config_;
  std::unique_ptr<ThreadRecord[]> records_;
  std::mutex registry_mu_;
  alignas(64) std::atomic<std::size_t> high_water_{0};
  alignas(64) std::atomic<std::uint64_t> phase_{0};
  Tracer tracer_;
  AuditTotals audit_;
};

/// Drives a restartable operation.
///
/// Op provides kRefCount (≤ 7), kEntry, a trivially copyable `locals` member
/// (the checkpoint record) and `Step step(ExecutionContext&, int label)`.
/// References live in ctx.ref(i). A restart re-enters step() at the resume
/// label of the last checkpoint with refs and locals restored.
template <class Op>
void run_operation(ExecutionContext& ctx, Op& op, std::span<const std::uint64_t> ref_inputs = {}) {
  static_assert(Op::kRefCount <= kSlotsPerFrame, "an operation may hold at most 7 references");
  static_assert(std::is_trivially_copyable_v<decltype(op.locals)>);
  static_assert(sizeof(op.locals) <= ExecutionContext::kCheckpointBytes);
  ctx.op_begin(ref_inputs, &op.locals, sizeof(op.locals), Op::kEntry, Op::kRefCount);
  struct Closer {
    ExecutionContext& c;
    ~Closer() {
      if (c.in_operation()) c.op_end();
    }
  } closer{ctx};
  int label = Op::kEntry;
  for (;;) {
    ctx.probe(ProbePoint::kStep, label);
    Step s = op.step(ctx, label);
    if (s.kind == Step::Kind::kDone) break;
    label = s.kind == Step::Kind::kNext ? s.label : ctx.restart();
  }
}

/// Atomic exchange on a reference cell built from a read and a CAS.
std::uint64_t emulated_swap(ExecutionContext& ctx, std::uint64_t& cell, std::uint64_t desired);

}  // namespace freeaccess
