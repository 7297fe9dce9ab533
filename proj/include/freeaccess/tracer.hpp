#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "freeaccess/node_pool.hpp"

namespace freeaccess {

enum class Stage : std::uint64_t { kSignaling = 0, kTracing = 1, kSweeping = 2, kDone = 3 };

/// Status word of the phase driver: phase << 2 | stage. Both parts only move
/// forward, so the packed value is monotone too.
struct PhaseStatus {
  std::uint64_t phase = 0;
  Stage stage = Stage::kDone;

  static constexpr std::uint64_t pack(std::uint64_t phase, Stage stage) noexcept {
    return (phase << 2) | static_cast<std::uint64_t>(stage);
  }
  static constexpr PhaseStatus unpack(std::uint64_t w) noexcept {
    return {w >> 2, static_cast<Stage>(w & 3)};
  }
  constexpr std::uint64_t packed() const noexcept { return pack(phase, stage); }
};

/// What the tracer needs from the thread protocol.
class PhaseHooks {
 public:
  virtual ~PhaseHooks() = default;
  /// Sets every registered thread's dirty flag for phase (idempotent).
  virtual void signal_all(std::uint64_t phase) = 0;
  /// Appends all local and global roots (untagged, possibly out of arena).
  virtual void gather_roots(std::vector<std::uint64_t>& out) = 0;
};

/// Lock-free mark and sweep driver shared by every helper.
///
/// Marking runs a private DFS from the roots the helper gathered, followed by
/// passes over the mark table that scan any node marked in the phase but not
/// yet scanned. Such grey nodes stay visible in the table whatever happens to
/// the helper that discovered them, so a suspended helper never blocks the
/// phase. Tracing ends with a pass that finds no grey node while the global
/// mark counter stays still.
class Tracer {
 public:
  explicit Tracer(PhaseHooks& hooks) : hooks_(hooks) {}

  void attach(Arena& arena) { arenas_.push_back(&arena); }
  const std::vector<Arena*>& arenas() const noexcept { return arenas_; }

  PhaseStatus status() const noexcept {
    return PhaseStatus::unpack(status_.load(std::memory_order_seq_cst));
  }

  /// Moves the status from (q, done), q < phase, to (phase, signaling).
  bool open_phase(std::uint64_t phase) noexcept;
  /// Works on phase until its status passes (phase, done).
  void help(std::uint64_t phase);
  /// Helps (and opens, when needed) until phase q is done.
  void help_through(std::uint64_t q);

  std::uint64_t completed_phases() const noexcept { return completed_.load(std::memory_order_acquire); }
  std::uint64_t reclaimed_total() const noexcept { return reclaimed_.load(std::memory_order_acquire); }
  std::uint64_t last_phase_reclaimed() const noexcept { return last_reclaimed_.load(std::memory_order_acquire); }

  /// Marks the closure of roots in phase. Returns false if the status moved
  /// past (phase, tracing) before the helper saw a clean pass.
  bool trace(const std::vector<std::uint64_t>& roots, std::uint64_t phase);
  /// Sweeps every attached arena for phase by claiming chunks, then helps
  /// chunks whose claimer has not finished.
  void sweep_all(std::uint64_t phase);

  /// Marks one candidate reference; ignores values outside every arena.
  bool mark_candidate(std::uint64_t link, std::uint64_t phase, std::vector<std::uint64_t>& stack);

 private:
  Arena* find_arena(std::uint64_t addr) const noexcept;
  void scan(Arena& arena, NodeRef node, std::uint64_t phase, std::vector<std::uint64_t>& stack);
  void drain(std::vector<std::uint64_t>& stack, std::uint64_t phase);
  bool advance(std::uint64_t phase, Stage from, Stage to) noexcept;

  PhaseHooks& hooks_;
  std::vector<Arena*> arenas_;
  alignas(64) std::atomic<std::uint64_t> status_{PhaseStatus::pack(0, Stage::kDone)};
  alignas(64) std::atomic<std::uint64_t> marks_{0};
  alignas(64) std::atomic<std::uint64_t> completed_{0};
  std::atomic<std::uint64_t> reclaimed_{0};
  std::atomic<std::uint64_t> last_reclaimed_{0};
  std::atomic<std::uint64_t> sweep_base_{0};
};

}  // namespace freeaccess
