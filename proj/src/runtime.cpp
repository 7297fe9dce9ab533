#include "freeaccess/runtime.hpp"

#include <algorithm>

namespace freeaccess {

// ---------------------------------------------------------------- context

ExecutionContext::ExecutionContext(Runtime& rt, ThreadRecord& rec, std::size_t tid)
    : rt_(rt),
      rec_(rec),
      tid_(tid),
      audit_(rt.config().audit),
      mutation_(rt.config().mutation) {}

ExecutionContext::~ExecutionContext() {
  if (in_op_) op_end();
  rt_.audit_.restarts.fetch_add(stats_.restarts, std::memory_order_relaxed);
  rt_.release(rec_);
}

void ExecutionContext::publish(std::uint64_t target) noexcept {
  // Slot 0 is always written so the first publication erases the marker.
  std::size_t n = std::max<std::size_t>(ref_count_, 1);
  for (std::size_t i = 0; i < n; ++i) {
    store_word(rec_.words[target + i], refs_[i], std::memory_order_relaxed);
  }
}

void ExecutionContext::settle() {
  std::uint64_t w = load_word(rec_.words[0]);
  while ((w & 1) != 0) {
    std::uint64_t phase = decode(w).phase;
    rt_.tracer().help_through(phase);
    last_seen_ = std::max(last_seen_, phase);
    // A CAS rather than a plain store: a signal for a newer phase that lands
    // here must survive so it is helped before we go on.
    if (cas_word(rec_.words[0], w, w & ~std::uint64_t{0xFF}, std::memory_order_relaxed)) break;
    w = load_word(rec_.words[0]);
  }
}

void ExecutionContext::op_begin(std::span<const std::uint64_t> ref_inputs, void* locals,
                                std::size_t locals_size, int entry, std::size_t ref_count) {
  if (in_op_) throw std::logic_error("op_begin called inside an operation");
  if (ref_count > kSlotsPerFrame || ref_inputs.size() > ref_count) {
    throw std::invalid_argument("an operation may hold at most 7 references");
  }
  if (locals_size > kCheckpointBytes) throw std::invalid_argument("checkpoint record too large");
  in_op_ = true;
  in_write_only_ = false;
  ar_ = kArbiterFirst;
  ref_count_ = ref_count;
  refs_.fill(kNullRef);
  std::copy(ref_inputs.begin(), ref_inputs.end(), refs_.begin());
  locals_ = locals;
  locals_size_ = locals_size;
  published_ = false;
  ++stats_.operations;

  if (!ref_inputs.empty()) {
    // Dummy write-only period publishing the inputs.
    for (;;) {
      publish(flip_arbiter(ar_));
      std::atomic_thread_fence(std::memory_order_seq_cst);
      if (!is_dirty()) break;
      settle();
    }
    ar_ = flip_arbiter(ar_);
    published_ = true;
  }
  if (locals_size_ != 0) std::memcpy(checkpoint_.data(), locals_, locals_size_);
  resume_ = entry;
}

void ExecutionContext::op_end() {
  if (mutation_ != Mutation::kSkipMarker) {
    store_word(rec_.words[kArbiterSecond], kMarker, std::memory_order_release);
  }
  in_op_ = false;
  in_write_only_ = false;
  locals_ = nullptr;
  locals_size_ = 0;
}

bool ExecutionContext::begin_write_only() {
  const std::uint64_t target = flip_arbiter(ar_);
  if (mutation_ == Mutation::kSkipFence) {
    // Models the store-load reordering the fence forbids: the dirty load is
    // satisfied before the frame stores become visible.
    bool dirty = is_dirty();
    probe(ProbePoint::kWriteOnlyEntry, resume_);
    publish(target);
    if (dirty) return false;
  } else {
    publish(target);
    probe(ProbePoint::kWriteOnlyEntry, resume_);
    std::atomic_thread_fence(std::memory_order_seq_cst);
    if (is_dirty()) return false;
  }
  ar_ = target;
  published_ = true;
  in_write_only_ = true;
  ++stats_.write_only_periods;
  return true;
}

void ExecutionContext::end_write_only(int resume) {
  if (locals_size_ != 0) std::memcpy(checkpoint_.data(), locals_, locals_size_);
  resume_ = resume;
  in_write_only_ = false;
}

int ExecutionContext::restart() {
  ++stats_.restarts;
  in_write_only_ = false;
  settle();
  for (std::size_t i = 0; i < ref_count_; ++i) {
    refs_[i] = published_ ? load_word(rec_.words[ar_ + i], std::memory_order_relaxed) : kNullRef;
  }
  if (locals_size_ != 0) std::memcpy(locals_, checkpoint_.data(), locals_size_);
  return resume_;
}

std::optional<NodeRef> ExecutionContext::alloc(Arena& arena) {
  if (auto n = arena.try_pop(rt_.phase())) {
    empty_streak_ = 0;
    return n;
  }
  std::uint64_t before = rt_.tracer().reclaimed_total();
  rt_.reclamation_phase(*this);
  if (rt_.tracer().reclaimed_total() == before && arena.free_count() == 0) {
    if (++empty_streak_ >= 2) {
      empty_streak_ = 0;
      throw ArenaExhausted("arena exhausted: two consecutive reclamation phases freed no node");
    }
  } else {
    empty_streak_ = 0;
  }
  return std::nullopt;
}

void ExecutionContext::inject_restart() noexcept {
  atomic_word(rec_.words[0]).fetch_or(1, std::memory_order_acq_rel);
}

bool ExecutionContext::certify(std::uint64_t v) noexcept {
  if (v != kPoison) return true;
  ++stats_.certified_poison;
  rt_.audit_.certified_poison.fetch_add(1, std::memory_order_relaxed);
  return false;
}

void ExecutionContext::audit_write(const std::uint64_t* cell) noexcept {
  if (!in_write_only_) {
    ++stats_.writes_outside_period;
    rt_.audit_.writes_outside_period.fetch_add(1, std::memory_order_relaxed);
  }
  auto addr = reinterpret_cast<std::uint64_t>(cell);
  if (Arena* a = rt_.arena_of(addr)) {
    if (!a->is_allocated(a->node_containing(addr))) {
      ++stats_.writes_to_free_nodes;
      rt_.audit_.writes_to_free_nodes.fetch_add(1, std::memory_order_relaxed);
    }
  }
}

// ---------------------------------------------------------------- runtime

Runtime::Runtime(RuntimeConfig config)
    : config_(config),
      records_(std::make_unique<ThreadRecord[]>(config.max_threads)),
      tracer_(*this) {
  if (config_.max_threads == 0) throw std::invalid_argument("max_threads must be positive");
}

Runtime::~Runtime() = default;

void Runtime::attach(Arena& arena) {
  for (Arena* a : tracer_.arenas()) {
    if (a == &arena) return;
  }
  tracer_.attach(arena);
}

Arena* Runtime::arena_of(std::uint64_t addr) const noexcept {
  for (Arena* a : tracer_.arenas()) {
    if (a->within(addr)) return a;
  }
  return nullptr;
}

std::unique_ptr<ExecutionContext> Runtime::register_thread() {
  std::lock_guard lock(registry_mu_);
  for (std::size_t i = 0; i < config_.max_threads; ++i) {
    ThreadRecord& rec = records_[i];
    if (rec.in_use.load(std::memory_order_acquire)) continue;
    for (std::size_t w = 1; w < 16; ++w) store_word(rec.words[w], kNullRef, std::memory_order_relaxed);
    store_word(rec.words[kArbiterSecond], kMarker, std::memory_order_relaxed);
    // Start dirty so the first check helps whatever phase is running.
    store_word(rec.words[0], encode(true, phase()), std::memory_order_seq_cst);
    rec.in_use.store(true, std::memory_order_release);
    if (high_water_.load(std::memory_order_relaxed) <= i) {
      high_water_.store(i + 1, std::memory_order_seq_cst);
    }
    // A phase opened before the record became visible may have skipped it.
    for (;;) {
      std::uint64_t p = phase();
      std::uint64_t w = load_word(rec.words[0], std::memory_order_seq_cst);
      if (decode(w).phase >= p) break;
      cas_word(rec.words[0], w, encode(true, p), std::memory_order_seq_cst);
    }
    auto ctx = std::make_unique<ExecutionContext>(*this, rec, i);
    ctx->last_seen_ = phase();
    return ctx;
  }
  throw std::runtime_error("thread registry full");
}

void Runtime::release(ThreadRecord& rec) noexcept {
  std::lock_guard lock(registry_mu_);
  store_word(rec.words[kArbiterSecond], kMarker, std::memory_order_release);
  rec.in_use.store(false, std::memory_order_release);
}

void Runtime::signal_all(std::uint64_t phase) {
  std::size_t n = registered();
  for (std::size_t i = 0; i < n; ++i) {
    ThreadRecord& rec = records_[i];
    std::uint64_t w = load_word(rec.words[0], std::memory_order_seq_cst);
    while (decode(w).phase < phase) {
      if (atomic_word(rec.words[0]).compare_exchange_weak(w, encode(true, phase),
                                                          std::memory_order_seq_cst)) {
        rec.signal_writes.fetch_add(1, std::memory_order_relaxed);
        break;
      }
    }
  }
}

void Runtime::gather_local_roots(std::vector<std::uint64_t>& out) {
  std::atomic_thread_fence(std::memory_order_seq_cst);
  std::size_t n = registered();
  for (std::size_t i = 0; i < n; ++i) {
    ThreadRecord& rec = records_[i];
    if (load_word(rec.words[kArbiterSecond]) == kMarker) continue;
    for (std::uint64_t base : {kArbiterFirst, kArbiterSecond}) {
      for (std::size_t s = 0; s < kSlotsPerFrame; ++s) {
        std::uint64_t v = load_word(rec.words[base + s]);
        if (v != kNullRef && v != kMarker) out.push_back(clear_tag(v));
      }
    }
  }
}

void Runtime::gather_roots(std::vector<std::uint64_t>& out) {
  gather_local_roots(out);
  for (Arena* a : tracer_.arenas()) a->gather_global_roots(out);
}

std::uint64_t Runtime::init_reclamation(ExecutionContext& ctx) {
  std::uint64_t lp = ctx.last_seen_;
  phase_.compare_exchange_strong(lp, lp + 1, std::memory_order_seq_cst);
  lp = phase_.load(std::memory_order_seq_cst);
  signal_all(lp);
  ctx.last_seen_ = lp;
  ++ctx.stats_.phases_initiated;
  return lp;
}

std::uint64_t Runtime::reclamation_phase(ExecutionContext& ctx) {
  PhaseStatus s = tracer_.status();
  if (s.stage != Stage::kDone) {
    tracer_.help_through(s.phase);
    return s.phase;
  }
  ctx.last_seen_ = s.phase;
  std::uint64_t p = init_reclamation(ctx);
  tracer_.open_phase(p);
  tracer_.help_through(p);
  return p;
}

NodeRef Runtime::allocate(ExecutionContext& ctx, Arena& arena) {
  for (;;) {
    std::optional<NodeRef> n = ctx.alloc(arena);
    if (!ctx.in_op_) ctx.settle();
    if (n) return *n;
  }
}

// ---------------------------------------------------------------- swap

namespace {

struct SwapOp {
  static constexpr std::size_t kRefCount = 2;
  static constexpr std::size_t kNew = 0;
  static constexpr std::size_t kCur = 1;
  enum Label { kEntry, kAfter };

  struct Locals {
    std::uint64_t* cell;
    bool ok;
  } locals{};
  std::uint64_t result = 0;

  Step step(ExecutionContext& ctx, int label) {
    if (label == kAfter) {
      if (!locals.ok) return Step::next(kEntry);
      result = ctx.ref(kCur);
      return Step::done();
    }
    std::uint64_t cur;
    if (!ctx.guarded_load(*locals.cell, cur)) return Step::restart();
    ctx.ref(kCur) = cur;
    if (!ctx.begin_write_only()) return Step::restart();
    locals.ok = ctx.cas(*locals.cell, cur, ctx.ref(kNew));
    ctx.end_write_only(kAfter);
    return Step::next(kAfter);
  }
};

}  // namespace

std::uint64_t emulated_swap(ExecutionContext& ctx, std::uint64_t& cell, std::uint64_t desired) {
  SwapOp op;
  op.locals.cell = &cell;
  const std::uint64_t inputs[1] = {desired};
  run_operation(ctx, op, inputs);
  return op.result;
}

}  // namespace freeaccess
