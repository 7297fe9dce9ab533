#include "set_common.hpp"

namespace freeaccess::detail {

namespace {

enum class OpKind : std::uint8_t { kContains, kInsert, kRemove };

/// One list operation as a restartable step machine.
///
/// Read-only periods: traversals. Write-only periods: one CAS each (plus the
/// new node's initialization for insert). Every CAS ends with a checkpoint,
/// so a restart never repeats a CAS that already happened.
struct FaListOp {
  static constexpr std::size_t kRefCount = 4;
  static constexpr std::size_t kPred = 0;
  static constexpr std::size_t kCurr = 1;
  static constexpr std::size_t kSucc = 2;
  static constexpr std::size_t kNew = 3;
  enum Label : int { kEntry = 0, kAfterSnip, kAfterUnlink, kAfterLink, kAfterTag, kFinish };

  struct Locals {
    std::int64_t key;
    OpKind kind;
    bool cas_ok;
    bool result;
  } locals{};

  Arena* arena = nullptr;
  std::uint64_t head = kNullRef;
  ListVariant variant = ListVariant::kHm;

  Step step(ExecutionContext& ctx, int label) {
    std::int64_t ckey = 0;
    Step out;
    bool found = false;
    switch (label) {
      case kEntry:
        if (locals.kind == OpKind::kContains && variant != ListVariant::kHm) {
          return wait_free_contains(ctx, label);
        }
        found = search(ctx, label, false, ckey, out);
        break;
      case kAfterSnip:
        found = search(ctx, label, locals.cas_ok, ckey, out);
        break;
      case kAfterUnlink:
        found = after_unlink(ctx, label, ckey, out);
        break;
      case kAfterLink:
        if (locals.cas_ok) {
          locals.result = true;
          return Step::done();
        }
        found = search(ctx, label, false, ckey, out);
        break;
      case kAfterTag:
        if (locals.cas_ok) return unlink_tagged(ctx);
        found = search(ctx, label, false, ckey, out);
        break;
      case kFinish:
        locals.result = true;
        return Step::done();
      default:
        throw std::logic_error("unknown resume label");
    }
    if (!found) return out;
    return act(ctx, ckey);
  }

  // Traverses ignoring tags, writes nothing.
  Step wait_free_contains(ExecutionContext& ctx, int label) {
    std::uint64_t curr = head;
    for (;;) {
      ctx.probe(ProbePoint::kTraversal, label);
      std::uint64_t k, nx;
      if (!ctx.guarded_load_pair(key_word(curr), next_word(curr), k, nx)) return Step::restart();
      if (as_key(k) >= locals.key) {
        locals.result = as_key(k) == locals.key && !is_tagged(nx);
        return Step::done();
      }
      if (clear_tag(nx) == kNullRef) return Step::restart();
      curr = clear_tag(nx);
    }
  }

  bool search(ExecutionContext& ctx, int label, bool from_succ, std::int64_t& ckey, Step& out) {
    if (variant == ListVariant::kHarris) return search_harris(ctx, label, ckey, out);
    return search_snip(ctx, label, from_succ, ckey, out);
  }

  // Harris-Michael search: unlinks tagged nodes one at a time. On success
  // pred.next == curr (untagged), curr.key >= key, succ = curr.next.
  bool search_snip(ExecutionContext& ctx, int label, bool from_succ, std::int64_t& ckey, Step& out) {
    std::uint64_t& pred = ctx.ref(kPred);
    std::uint64_t& curr = ctx.ref(kCurr);
    std::uint64_t& succ = ctx.ref(kSucc);
    if (from_succ) {
      curr = succ;
    } else {
      pred = head;
      std::uint64_t link;
      if (!ctx.guarded_load(next_word(pred), link)) return restart(out);
      curr = clear_tag(link);
    }
    for (;;) {
      ctx.probe(ProbePoint::kTraversal, label);
      std::uint64_t k, nx;
      if (!ctx.guarded_load_pair(key_word(curr), next_word(curr), k, nx)) return restart(out);
      if (is_tagged(nx)) {
        succ = clear_tag(nx);
        if (!ctx.begin_write_only()) return restart(out);
        locals.cas_ok = ctx.cas(next_word(pred), curr, succ);
        ctx.end_write_only(kAfterSnip);
        out = Step::next(kAfterSnip);
        return false;
      }
      if (as_key(k) >= locals.key) {
        ckey = as_key(k);
        succ = nx;
        return true;
      }
      if (nx == kNullRef) return restart(out);
      pred = curr;
      curr = nx;
    }
  }

  // Harris search: finds left (untagged) and right (first untagged node with
  // key >= key) and swings left.next over the tagged run between them with a
  // single CAS.
  bool search_harris(ExecutionContext& ctx, int label, std::int64_t& ckey, Step& out) {
    std::uint64_t& left = ctx.ref(kPred);
    std::uint64_t& right = ctx.ref(kCurr);
    std::uint64_t& left_next = ctx.ref(kSucc);
    std::uint64_t t = head;
    std::uint64_t t_next;
    std::uint64_t k;
    if (!ctx.guarded_load(next_word(head), t_next)) return restart(out);
    for (;;) {
      ctx.probe(ProbePoint::kTraversal, label);
      if (!is_tagged(t_next)) {
        left = t;
        left_next = t_next;
      }
      t = clear_tag(t_next);
      if (t == kNullRef) return restart(out);
      if (!ctx.guarded_load_pair(key_word(t), next_word(t), k, t_next)) return restart(out);
      if (!is_tagged(t_next) && as_key(k) >= locals.key) break;
    }
    right = t;
    if (left_next == right) {
      ckey = as_key(k);
      left_next = t_next;
      return true;
    }
    if (!ctx.begin_write_only()) return restart(out);
    locals.cas_ok = ctx.cas(next_word(left), left_next, right);
    ctx.end_write_only(kAfterUnlink);
    out = Step::next(kAfterUnlink);
    return false;
  }

  bool after_unlink(ExecutionContext& ctx, int label, std::int64_t& ckey, Step& out) {
    if (!locals.cas_ok) return search_harris(ctx, label, ckey, out);
    std::uint64_t k, nx;
    if (!ctx.guarded_load_pair(key_word(ctx.ref(kCurr)), next_word(ctx.ref(kCurr)), k, nx)) {
      return restart(out);
    }
    if (is_tagged(nx)) return search_harris(ctx, label, ckey, out);
    ckey = as_key(k);
    ctx.ref(kSucc) = nx;
    return true;
  }

  Step act(ExecutionContext& ctx, std::int64_t ckey) {
    switch (locals.kind) {
      case OpKind::kContains:
        locals.result = ckey == locals.key;
        return Step::done();
      case OpKind::kInsert: {
        if (ckey == locals.key) {
          locals.result = false;
          return Step::done();
        }
        if (ctx.ref(kNew) == kNullRef) {
          std::optional<NodeRef> n = ctx.alloc(*arena);
          if (!n) return Step::restart();
          ctx.ref(kNew) = n->raw();
        }
        if (!ctx.begin_write_only()) return Step::restart();
        std::uint64_t node = ctx.ref(kNew);
        ctx.init_store(key_word(node), as_word(locals.key));
        ctx.init_store(next_word(node), ctx.ref(kCurr));
        locals.cas_ok = ctx.cas(next_word(ctx.ref(kPred)), ctx.ref(kCurr), node);
        ctx.end_write_only(kAfterLink);
        return Step::next(kAfterLink);
      }
      case OpKind::kRemove: {
        if (ckey != locals.key) {
          locals.result = false;
          return Step::done();
        }
        if (!ctx.begin_write_only()) return Step::restart();
        std::uint64_t succ = ctx.ref(kSucc);
        locals.cas_ok = ctx.cas(next_word(ctx.ref(kCurr)), succ, with_tag(succ));
        ctx.end_write_only(kAfterTag);
        return Step::next(kAfterTag);
      }
    }
    return Step::done();
  }

  // The tag is in place; one attempt to unlink, failures are left to
  // later traversals.
  Step unlink_tagged(ExecutionContext& ctx) {
    if (!ctx.begin_write_only()) return Step::restart();
    ctx.cas(next_word(ctx.ref(kPred)), ctx.ref(kCurr), ctx.ref(kSucc));
    ctx.end_write_only(kFinish);
    return Step::next(kFinish);
  }

  static bool restart(Step& out) {
    out = Step::restart();
    return false;
  }
};

class FaSet;

class FaSession final : public SetSession {
 public:
  FaSession(FaSet& set, std::unique_ptr<ExecutionContext> ctx) : set_(set), ctx_(std::move(ctx)) {}

  bool contains(std::int64_t key) override { return run(OpKind::kContains, key); }
  bool insert(std::int64_t key) override { return run(OpKind::kInsert, key); }
  bool remove(std::int64_t key) override { return run(OpKind::kRemove, key); }
  void set_hook(ExecutionHook* hook) override { ctx_->set_hook(hook); }
  ExecutionContext* context() noexcept override { return ctx_.get(); }

 private:
  bool run(OpKind kind, std::int64_t key);

  FaSet& set_;
  std::unique_ptr<ExecutionContext> ctx_;
};

class FaSet final : public BucketSet {
 public:
  explicit FaSet(const SetConfig& config)
      : BucketSet(config, config.capacity()),
        runtime_(RuntimeConfig{config.max_threads, config.audit, config.mutation}) {
    runtime_.attach(arena_);
    arena_.register_global_roots(std::span<std::uint64_t>(heads_));
    auto ctx = runtime_.register_thread();
    build([&] { return runtime_.allocate(*ctx, arena_).raw(); });
  }

  std::unique_ptr<SetSession> open_session() override {
    return std::make_unique<FaSession>(*this, runtime_.register_thread());
  }

  MemoryReport memory_report() override {
    {
      auto ctx = runtime_.register_thread();
      runtime_.reclamation_phase(*ctx);
    }
    MemoryReport r;
    r.capacity = arena_.capacity();
    r.free = arena_.walk_free_list();
    r.allocated = arena_.allocated_count();
    r.live = count_live();
    return r;
  }

  SetStats stats() const override {
    SetStats s;
    s.reclaim_events = runtime_.tracer().completed_phases();
    s.reclaimed = runtime_.tracer().reclaimed_total();
    const auto& a = runtime_.audit_totals();
    s.restarts = a.restarts.load();
    s.certified_poison = a.certified_poison.load();
    s.writes_outside_period = a.writes_outside_period.load();
    s.writes_to_free_nodes = a.writes_to_free_nodes.load();
    return s;
  }

  Runtime* runtime() noexcept override { return &runtime_; }

 private:
  friend class FaSession;
  Runtime runtime_;
};

bool FaSession::run(OpKind kind, std::int64_t key) {
  check_key(key);
  FaListOp op;
  op.locals.key = key;
  op.locals.kind = kind;
  op.arena = &set_.arena();
  op.head = set_.head_for(key);
  op.variant = set_.config().variant;
  run_operation(*ctx_, op);
  return op.locals.result;
}

}  // namespace

std::unique_ptr<ConcurrentSet> make_fa_set(const SetConfig& config) {
  return std::make_unique<FaSet>(config);
}

}  // namespace freeaccess::detail
