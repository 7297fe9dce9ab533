#include "freeaccess/tracer.hpp"

#include <algorithm>

namespace freeaccess {

bool Tracer::open_phase(std::uint64_t phase) noexcept {
  std::uint64_t cur = status_.load(std::memory_order_seq_cst);
  for (;;) {
    PhaseStatus s = PhaseStatus::unpack(cur);
    if (s.stage != Stage::kDone || s.phase >= phase) return false;
    if (status_.compare_exchange_weak(cur, PhaseStatus::pack(phase, Stage::kSignaling),
                                      std::memory_order_seq_cst)) {
      return true;
    }
  }
}

bool Tracer::advance(std::uint64_t phase, Stage from, Stage to) noexcept {
  std::uint64_t expected = PhaseStatus::pack(phase, from);
  return status_.compare_exchange_strong(expected, PhaseStatus::pack(phase, to),
                                         std::memory_order_seq_cst);
}

Arena* Tracer::find_arena(std::uint64_t addr) const noexcept {
  for (Arena* a : arenas_) {
    if (a->owns(addr)) return a;
  }
  return nullptr;
}

bool Tracer::mark_candidate(std::uint64_t link, std::uint64_t phase,
                            std::vector<std::uint64_t>& stack) {
  std::uint64_t addr = clear_tag(link);
  if (addr == kNullRef) return false;
  Arena* arena = find_arena(addr);
  if (arena == nullptr) return false;
  if (!arena->mark_node(NodeRef(addr), phase)) return false;
  // Counted after the mark so a clean pass that read the counter first
  // either sees this node grey or sees the counter move.
  marks_.fetch_add(1, std::memory_order_seq_cst);
  stack.push_back(addr);
  return true;
}

void Tracer::scan(Arena& arena, NodeRef node, std::uint64_t phase,
                  std::vector<std::uint64_t>& stack) {
  for (std::size_t off : arena.layout().link_offsets) {
    std::uint64_t v = load_word(node.word(off / sizeof(std::uint64_t)), std::memory_order_acquire);
    mark_candidate(v, phase, stack);
  }
  arena.set_scanned(arena.index_of(node), phase);
}

void Tracer::drain(std::vector<std::uint64_t>& stack, std::uint64_t phase) {
  while (!stack.empty()) {
    std::uint64_t addr = stack.back();
    stack.pop_back();
    Arena* arena = find_arena(addr);
    scan(*arena, NodeRef(addr), phase, stack);
  }
}

bool Tracer::trace(const std::vector<std::uint64_t>& roots, std::uint64_t phase) {
  std::vector<std::uint64_t> stack;
  for (std::uint64_t r : roots) mark_candidate(r, phase, stack);
  drain(stack, phase);

  const std::uint64_t tracing = PhaseStatus::pack(phase, Stage::kTracing);
  for (;;) {
    std::uint64_t before = marks_.load(std::memory_order_seq_cst);
    bool grey = false;
    for (Arena* arena : arenas_) {
      std::size_t hw = std::min(arena->capacity(), arena->high_water());
      for (std::size_t i = 0; i < hw; ++i) {
        std::uint64_t s = arena->state(i);
        if (!Arena::state_allocated(s) || Arena::state_scanned(s) || Arena::state_phase(s) != phase) {
          continue;
        }
        grey = true;
        scan(*arena, arena->node_at(i), phase, stack);
        drain(stack, phase);
      }
    }
    if (status_.load(std::memory_order_seq_cst) != tracing) return false;
    if (!grey && marks_.load(std::memory_order_seq_cst) == before) return true;
  }
}

void Tracer::sweep_all(std::uint64_t phase) {
  std::uint64_t freed = 0;
  for (Arena* arena : arenas_) {
    for (std::size_t c = 0; c < arena->chunk_count(); ++c) {
      std::uint64_t claim = load_word(arena->chunk_claim(c));
      if (claim >= phase || !cas_word(arena->chunk_claim(c), claim, phase)) continue;
      freed += arena->sweep_range(c * Arena::kSweepChunk, (c + 1) * Arena::kSweepChunk, phase);
      std::uint64_t done = load_word(arena->chunk_done(c));
      while (done < phase && !cas_word(arena->chunk_done(c), done, phase)) {
        done = load_word(arena->chunk_done(c));
      }
    }
  }
  // Chunks claimed by helpers that have not finished: sweeping them again is
  // safe because every node is freed by exactly one state CAS.
  for (Arena* arena : arenas_) {
    for (std::size_t c = 0; c < arena->chunk_count(); ++c) {
      std::uint64_t done = load_word(arena->chunk_done(c));
      if (done >= phase) continue;
      freed += arena->sweep_range(c * Arena::kSweepChunk, (c + 1) * Arena::kSweepChunk, phase);
      while (done < phase && !cas_word(arena->chunk_done(c), done, phase)) {
        done = load_word(arena->chunk_done(c));
      }
    }
  }
  reclaimed_.fetch_add(freed, std::memory_order_acq_rel);
}

void Tracer::help(std::uint64_t phase) {
  std::vector<std::uint64_t> roots;
  for (;;) {
    PhaseStatus s = status();
    if (s.phase != phase || s.stage == Stage::kDone) return;
    switch (s.stage) {
      case Stage::kSignaling:
        hooks_.signal_all(phase);
        advance(phase, Stage::kSignaling, Stage::kTracing);
        break;
      case Stage::kTracing:
        roots.clear();
        hooks_.gather_roots(roots);
        if (trace(roots, phase)) {
          std::uint64_t base = reclaimed_.load(std::memory_order_acquire);
          if (advance(phase, Stage::kTracing, Stage::kSweeping)) {
            sweep_base_.store(base, std::memory_order_release);
          }
        }
        break;
      case Stage::kSweeping:
        sweep_all(phase);
        if (advance(phase, Stage::kSweeping, Stage::kDone)) {
          std::uint64_t total = reclaimed_.load(std::memory_order_acquire);
          last_reclaimed_.store(total - std::min(total, sweep_base_.load(std::memory_order_acquire)),
                                std::memory_order_release);
          completed_.fetch_add(1, std::memory_order_acq_rel);
        }
        break;
      case Stage::kDone:
        return;
    }
  }
}

void Tracer::help_through(std::uint64_t q) {
  for (;;) {
    PhaseStatus s = status();
    if (s.phase > q || (s.phase == q && s.stage == Stage::kDone)) return;
    if (s.stage == Stage::kDone) {
      open_phase(q);
    } else {
      help(s.phase);
    }
  }
}

}  // namespace freeaccess
