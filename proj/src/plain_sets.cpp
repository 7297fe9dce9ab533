#include <memory>

#include "freeaccess/baselines.hpp"
#include "set_common.hpp"

namespace freeaccess::detail {

namespace {

// Slot roles for the Michael search: 0 next, 1 curr, 2 pred.
constexpr std::size_t kHpNext = 0;
constexpr std::size_t kHpCurr = 1;
constexpr std::size_t kHpPred = 2;

struct NrGuard {
  void begin() noexcept {}
  void end() noexcept {}
  std::uint64_t protect(std::size_t, const std::uint64_t& cell) noexcept { return load_word(cell); }
  void copy(std::size_t, std::size_t) noexcept {}
  void retire(std::uint64_t) {}
  bool refill() { return false; }
};

struct HpGuard {
  HazardDomain* d;
  std::size_t tid;
  void begin() noexcept {}
  void end() noexcept { d->clear(tid); }
  std::uint64_t protect(std::size_t i, const std::uint64_t& cell) noexcept { return d->read(tid, cell, i); }
  void copy(std::size_t from, std::size_t to) noexcept { d->copy(tid, from, to); }
  void retire(std::uint64_t n) { d->retire(tid, NodeRef(n)); }
  bool refill() { return d->scan(tid) != 0; }
};

struct EbrGuard {
  EpochDomain* d;
  std::size_t tid;
  void begin() noexcept { d->enter(tid); }
  void end() noexcept { d->exit(tid); }
  std::uint64_t protect(std::size_t, const std::uint64_t& cell) noexcept { return load_word(cell); }
  void copy(std::size_t, std::size_t) noexcept {}
  void retire(std::uint64_t n) { d->retire(tid, NodeRef(n)); }
  bool refill() {
    d->try_advance();
    return d->collect(tid) != 0;
  }
};

class PlainSet;

/// Harris-Michael list (Michael's hazard-pointer formulation) over a guard
/// policy; NR also serves the hhs and harris variants' wait-free contains.
template <class Guard>
class PlainSession final : public SetSession {
 public:
  PlainSession(PlainSet& set, Guard guard, std::size_t tid);
  ~PlainSession() override;

  bool contains(std::int64_t key) override;
  bool insert(std::int64_t key) override;
  bool remove(std::int64_t key) override;
  void set_hook(ExecutionHook* hook) override { hook_ = hook; }

 private:
  struct Position {
    std::uint64_t* prev;
    std::uint64_t curr;
    std::uint64_t next;
  };

  bool find(std::uint64_t head, std::int64_t key, Position& pos);
  std::uint64_t alloc();
  void probe() {
    if (hook_ != nullptr) [[unlikely]] hook_->on_probe({ProbePoint::kTraversal, 0, nullptr});
  }

  PlainSet& set_;
  Guard g_;
  std::size_t tid_;
  ExecutionHook* hook_ = nullptr;
};

class PlainSet final : public BucketSet {
 public:
  explicit PlainSet(const SetConfig& config) : BucketSet(config, config.capacity()) {
    if (config.scheme == Scheme::kHp) {
      hp_ = std::make_unique<HazardDomain>(arena_, config.max_threads, config.effective_hp_threshold());
    } else if (config.scheme == Scheme::kEbr) {
      ebr_ = std::make_unique<EpochDomain>(arena_, config.max_threads);
    }
    build([&] {
      auto n = arena_.try_pop(0);
      if (!n) throw ArenaExhausted("pool too small for the sentinels");
      return n->raw();
    });
  }

  std::unique_ptr<SetSession> open_session() override {
    std::size_t tid = acquire_tid();
    switch (config_.scheme) {
      case Scheme::kHp:
        return std::make_unique<PlainSession<HpGuard>>(*this, HpGuard{hp_.get(), tid}, tid);
      case Scheme::kEbr:
        return std::make_unique<PlainSession<EbrGuard>>(*this, EbrGuard{ebr_.get(), tid}, tid);
      default:
        return std::make_unique<PlainSession<NrGuard>>(*this, NrGuard{}, tid);
    }
  }

  MemoryReport memory_report() override {
    MemoryReport r;
    r.capacity = arena_.capacity();
    r.free = arena_.walk_free_list();
    r.allocated = arena_.allocated_count();
    r.live = count_live();
    if (hp_) r.pending = hp_->pending();
    if (ebr_) r.pending = ebr_->pending();
    return r;
  }

  SetStats stats() const override {
    SetStats s;
    if (hp_) {
      s.reclaim_events = hp_->scans();
      s.reclaimed = hp_->reclaimed();
    }
    if (ebr_) {
      s.reclaim_events = ebr_->advances();
      s.reclaimed = ebr_->reclaimed();
    }
    return s;
  }

 private:
  template <class>
  friend class PlainSession;
  std::unique_ptr<HazardDomain> hp_;
  std::unique_ptr<EpochDomain> ebr_;
};

template <class Guard>
PlainSession<Guard>::PlainSession(PlainSet& set, Guard guard, std::size_t tid)
    : set_(set), g_(guard), tid_(tid) {}

template <class Guard>
PlainSession<Guard>::~PlainSession() {
  set_.release_tid(tid_);
}

template <class Guard>
std::uint64_t PlainSession<Guard>::alloc() {
  for (int attempt = 0; attempt < 4; ++attempt) {
    if (auto n = set_.arena().try_pop(0)) return n->raw();
    if (!g_.refill() && attempt >= 1) break;
  }
  if (auto n = set_.arena().try_pop(0)) return n->raw();
  throw ArenaExhausted(std::string("arena exhausted under ") + std::string(to_string(set_.config().scheme)));
}

template <class Guard>
bool PlainSession<Guard>::find(std::uint64_t head, std::int64_t key, Position& pos) {
retry:
  pos.prev = &next_word(head);
  pos.curr = g_.protect(kHpCurr, *pos.prev);
  for (;;) {
    probe();
    pos.next = g_.protect(kHpNext, next_word(pos.curr));
    if (load_word(*pos.prev) != pos.curr) goto retry;
    std::int64_t ckey = as_key(load_word(key_word(pos.curr)));
    if (!is_tagged(pos.next)) {
      if (ckey >= key) return ckey == key;
      pos.prev = &next_word(pos.curr);
      g_.copy(kHpCurr, kHpPred);
    } else {
      std::uint64_t succ = clear_tag(pos.next);
      if (!cas_word(*pos.prev, pos.curr, succ, std::memory_order_seq_cst)) goto retry;
      g_.retire(pos.curr);
    }
    pos.curr = clear_tag(pos.next);
    g_.copy(kHpNext, kHpCurr);
  }
}

template <class Guard>
bool PlainSession<Guard>::contains(std::int64_t key) {
  check_key(key);
  std::uint64_t head = set_.head_for(key);
  if constexpr (std::is_same_v<Guard, NrGuard>) {
    if (set_.config().variant != ListVariant::kHm) {
      std::uint64_t curr = head;
      for (;;) {
        probe();
        std::uint64_t nx = load_word(next_word(curr));
        std::int64_t k = as_key(load_word(key_word(curr)));
        if (k >= key) return k == key && !is_tagged(nx);
        curr = clear_tag(nx);
      }
    }
  }
  g_.begin();
  Position pos;
  bool r = find(head, key, pos);
  g_.end();
  return r;
}

template <class Guard>
bool PlainSession<Guard>::insert(std::int64_t key) {
  check_key(key);
  std::uint64_t head = set_.head_for(key);
  g_.begin();
  std::uint64_t node = kNullRef;
  bool r;
  for (;;) {
    Position pos;
    if (find(head, key, pos)) {
      if (node != kNullRef && !std::is_same_v<Guard, NrGuard>) set_.arena().release(NodeRef(node));
      r = false;
      break;
    }
    if (node == kNullRef) {
      try {
        node = alloc();
      } catch (...) {
        g_.end();
        throw;
      }
      store_word(key_word(node), as_word(key), std::memory_order_relaxed);
    }
    store_word(next_word(node), pos.curr, std::memory_order_relaxed);
    if (cas_word(*pos.prev, pos.curr, node, std::memory_order_seq_cst)) {
      r = true;
      break;
    }
  }
  g_.end();
  return r;
}

template <class Guard>
bool PlainSession<Guard>::remove(std::int64_t key) {
  check_key(key);
  std::uint64_t head = set_.head_for(key);
  g_.begin();
  bool r;
  for (;;) {
    Position pos;
    if (!find(head, key, pos)) {
      r = false;
      break;
    }
    if (!cas_word(next_word(pos.curr), pos.next, with_tag(pos.next), std::memory_order_seq_cst)) continue;
    if (cas_word(*pos.prev, pos.curr, pos.next, std::memory_order_seq_cst)) {
      g_.retire(pos.curr);
    } else {
      find(head, key, pos);
    }
    r = true;
    break;
  }
  g_.end();
  return r;
}

}  // namespace

std::unique_ptr<ConcurrentSet> make_plain_set(const SetConfig& config) {
  return std::make_unique<PlainSet>(config);
}

}  // namespace freeaccess::detail
