#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <thread>

#include "freeaccess/runtime.hpp"

using namespace freeaccess;

namespace {

struct Ctr {
  std::uint64_t ctr;
};

std::unique_ptr<ExecutionContext> settled(Runtime& rt) {
  auto c = rt.register_thread();
  c->settle();
  return c;
}

std::set<std::uint64_t> local_roots(Runtime& rt) {
  std::vector<std::uint64_t> v;
  rt.gather_local_roots(v);
  return {v.begin(), v.end()};
}

}  // namespace

TEST(DirtyPhase, EncodeTable) {
  EXPECT_EQ(encode(false, 0), 0u);
  EXPECT_EQ(encode(true, 5), 0x501u);
  EXPECT_EQ(encode(true, kMaxPhase), 0xFFFFFFFFFFFFFF01u);
  EXPECT_EQ(decode(0x501).phase, 5u);
  EXPECT_TRUE(decode(0x501).dirty);
  EXPECT_FALSE(decode(0).dirty);
  EXPECT_EQ(decode(0xFFFFFFFFFFFFFF01u).phase, kMaxPhase);
}

TEST(DirtyPhase, RoundTripProperty) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    std::uint64_t p = rng() & kMaxPhase;
    for (bool d : {false, true}) {
      auto r = decode(encode(d, p));
      EXPECT_EQ(r.dirty, d);
      EXPECT_EQ(r.phase, p);
    }
  }
}

TEST(Arbiter, FlipAndIndex) {
  EXPECT_EQ(flip_arbiter(kArbiterFirst), kArbiterSecond);
  EXPECT_EQ(flip_arbiter(kArbiterSecond), kArbiterFirst);
  EXPECT_EQ(frame_index(kArbiterFirst), 0u);
  EXPECT_EQ(frame_index(kArbiterSecond), 1u);
}

TEST(InitReclamation, SingleThreadFromPhaseThree) {
  Runtime rt;
  auto c = settled(rt);
  for (int i = 0; i < 3; ++i) {
    rt.reclamation_phase(*c);
    c->settle();
  }
  ASSERT_EQ(rt.phase(), 3u);
  EXPECT_EQ(rt.init_reclamation(*c), 4u);
  EXPECT_EQ(rt.phase(), 4u);
  EXPECT_EQ(load_word(c->record().words[0]), encode(true, 4));
}

TEST(InitReclamation, RaceAdvancesOnce) {
  for (int trial = 0; trial < 200; ++trial) {
    Runtime rt;
    auto a = settled(rt);
    auto b = settled(rt);
    auto before_a = a->record().signal_writes.load();
    auto before_b = b->record().signal_writes.load();
    std::thread t1([&] { rt.init_reclamation(*a); });
    std::thread t2([&] { rt.init_reclamation(*b); });
    t1.join();
    t2.join();
    EXPECT_EQ(rt.phase(), 1u);
    EXPECT_EQ(a->record().signal_writes.load() - before_a, 1u);
    EXPECT_EQ(b->record().signal_writes.load() - before_b, 1u);
  }
}

TEST(InitReclamation, AlreadySignaledIsNotRewritten) {
  Runtime rt;
  auto c = settled(rt);
  rt.init_reclamation(*c);
  auto writes = c->record().signal_writes.load();
  rt.signal_all(rt.phase());
  EXPECT_EQ(c->record().signal_writes.load(), writes);
}

TEST(WriteOnly, PublishesRefsAndFlips) {
  Runtime rt;
  auto c = settled(rt);
  Ctr l{0};
  c->op_begin({}, &l, sizeof l, 0, 2);
  c->ref(0) = 0xA0;
  c->ref(1) = 0xB0;
  ASSERT_TRUE(c->begin_write_only());
  EXPECT_EQ(c->arbiter(), kArbiterSecond);
  EXPECT_EQ(c->record().words[9], 0xA0u);
  EXPECT_EQ(c->record().words[10], 0xB0u);
  c->end_write_only(1);
  c->op_end();
}

TEST(WriteOnly, DirtyTakesRestartKeepsFrame) {
  Runtime rt;
  auto c = settled(rt);
  Ctr l{0};
  c->op_begin({}, &l, sizeof l, 0, 2);
  c->ref(0) = 0xA0;
  c->ref(1) = 0xB0;
  ASSERT_TRUE(c->begin_write_only());
  c->end_write_only(1);
  c->ref(0) = 0xC0;
  c->ref(1) = 0xD0;
  c->inject_restart();
  EXPECT_FALSE(c->begin_write_only());
  EXPECT_EQ(c->arbiter(), kArbiterSecond);
  EXPECT_EQ(c->record().words[9], 0xA0u);
  EXPECT_EQ(c->record().words[10], 0xB0u);
  EXPECT_EQ(c->restart(), 1);
  EXPECT_EQ(c->ref(0), 0xA0u);
  EXPECT_EQ(c->ref(1), 0xB0u);
  c->op_end();
}

TEST(WriteOnly, ZeroRefsStillChecksDirty) {
  Runtime rt;
  auto c = settled(rt);
  Ctr l{0};
  c->op_begin({}, &l, sizeof l, 0, 0);
  EXPECT_TRUE(c->begin_write_only());
  c->end_write_only(1);
  c->inject_restart();
  EXPECT_FALSE(c->begin_write_only());
  c->restart();
  c->op_end();
}

TEST(EndWriteOnly, CheckpointAndResume) {
  Runtime rt;
  auto c = settled(rt);
  Ctr l{7};
  c->op_begin({}, &l, sizeof l, 0, 1);
  c->ref(0) = 0xE0;
  ASSERT_TRUE(c->begin_write_only());
  c->end_write_only(3);
  l.ctr = 99;
  c->end_write_only(2);  // last writer wins: ({99}, 2)
  l.ctr = 7;
  ASSERT_TRUE(c->begin_write_only());
  c->end_write_only(2);  // ({7}, 2)
  l.ctr = 1234;
  c->ref(0) = 0;
  c->inject_restart();
  EXPECT_EQ(c->restart(), 2);
  EXPECT_EQ(l.ctr, 7u);
  EXPECT_EQ(c->ref(0), 0xE0u);
  c->op_end();
}

TEST(ValidateRead, Table) {
  Runtime rt;
  auto c = settled(rt);
  auto other = settled(rt);
  std::uint64_t x = 11, y = 22, vx = 0, vy = 0;
  Ctr l{0};
  c->op_begin({}, &l, sizeof l, 0, 0);
  EXPECT_TRUE(c->guarded_load(x, vx));
  EXPECT_EQ(vx, 11u);
  EXPECT_TRUE(c->guarded_load_pair(x, y, vx, vy));
  EXPECT_EQ(vy, 22u);
  rt.init_reclamation(*other);
  EXPECT_FALSE(c->validate_read());
  EXPECT_FALSE(c->guarded_load_pair(x, y, vx, vy));
  c->restart();
  EXPECT_TRUE(c->validate_read());
  c->op_end();
}

TEST(Restart, MarkerStateReentersEntry) {
  Runtime rt;
  auto c = settled(rt);
  Ctr l{5};
  c->op_begin({}, &l, sizeof l, 4, 2);
  c->ref(0) = 0xF0;
  l.ctr = 6;
  c->inject_restart();
  EXPECT_EQ(c->restart(), 4);
  EXPECT_EQ(l.ctr, 5u);
  EXPECT_EQ(c->ref(0), kNullRef);
  c->op_end();
}

TEST(Restart, DoubleSignalOneRestart) {
  Runtime rt;
  auto c = settled(rt);
  auto other = settled(rt);
  Ctr l{0};
  c->op_begin({}, &l, sizeof l, 0, 0);
  rt.reclamation_phase(*other);
  other->settle();
  rt.reclamation_phase(*other);
  other->settle();
  EXPECT_TRUE(c->is_dirty());
  EXPECT_EQ(decode(load_word(c->record().words[0])).phase, 2u);
  c->restart();
  EXPECT_FALSE(c->is_dirty());
  EXPECT_EQ(c->stats().restarts, 1u);
  c->op_end();
}

TEST(OpBegin, NoRefInputsNoPublication) {
  Runtime rt;
  auto c = settled(rt);
  Ctr l{5};
  c->op_begin({}, &l, sizeof l, 0, 0);
  EXPECT_TRUE(c->record().idle());
  EXPECT_TRUE(local_roots(rt).empty());
  c->op_end();
}

TEST(OpBegin, RefInputRestoredOnRestart) {
  Runtime rt;
  auto c = settled(rt);
  Ctr l{0};
  const std::uint64_t in[1] = {0x1230};
  c->op_begin(in, &l, sizeof l, 0, 2);
  EXPECT_EQ(local_roots(rt), std::set<std::uint64_t>{0x1230});
  c->ref(0) = 0;
  c->inject_restart();
  EXPECT_EQ(c->restart(), 0);
  EXPECT_EQ(c->ref(0), 0x1230u);
  c->op_end();
}

TEST(OpBegin, TwiceIsAnError) {
  Runtime rt;
  auto c = settled(rt);
  Ctr l{0};
  c->op_begin({}, &l, sizeof l, 0, 0);
  EXPECT_THROW(c->op_begin({}, &l, sizeof l, 0, 0), std::logic_error);
  c->op_end();
}

TEST(OpBegin, MoreThanSevenRefsRejected) {
  Runtime rt;
  auto c = settled(rt);
  Ctr l{0};
  EXPECT_THROW(c->op_begin({}, &l, sizeof l, 0, 8), std::invalid_argument);
}

TEST(OpEnd, MarkerSkipsThreadAndIsOverwrittenFirst) {
  Runtime rt;
  auto c = settled(rt);
  Ctr l{0};
  c->op_begin({}, &l, sizeof l, 0, 1);
  c->ref(0) = 0x40;
  ASSERT_TRUE(c->begin_write_only());
  c->end_write_only(1);
  EXPECT_FALSE(local_roots(rt).empty());
  c->op_end();
  EXPECT_TRUE(local_roots(rt).empty());

  c->op_begin({}, &l, sizeof l, 0, 1);
  c->ref(0) = 0x80;
  ASSERT_TRUE(c->begin_write_only());
  EXPECT_EQ(c->record().words[kArbiterSecond], 0x80u);
  c->op_end();
}

TEST(OpEnd, ReadOnlyOpLeavesNoRoots) {
  Runtime rt;
  auto c = settled(rt);
  Ctr l{0};
  c->op_begin({}, &l, sizeof l, 0, 3);
  c->op_end();
  EXPECT_TRUE(local_roots(rt).empty());
}

TEST(GatherLocalRoots, Table) {
  Runtime rt;
  auto a = settled(rt);
  auto b = settled(rt);
  auto idle = settled(rt);
  Ctr l{0};
  a->op_begin({}, &l, sizeof l, 0, 1);
  a->ref(0) = 0xA00;
  ASSERT_TRUE(a->begin_write_only());
  Ctr m{0};
  b->op_begin({}, &m, sizeof m, 0, 1);
  b->ref(0) = with_tag(0xB00);
  ASSERT_TRUE(b->begin_write_only());
  EXPECT_EQ(local_roots(rt), (std::set<std::uint64_t>{0xA00, 0xB00}));
  a->op_end();
  b->op_end();
  EXPECT_TRUE(local_roots(rt).empty());
}

namespace {

// Two increments in separate write-only periods; a restart requested after
// the first must not repeat it.
struct TwoIncrements {
  static constexpr std::size_t kRefCount = 0;
  static constexpr int kEntry = 0;
  std::uint64_t* x;
  std::uint64_t* y;
  int executions = 0;
  struct Locals {
    std::uint64_t seen_x;
  } locals{};

  Step step(ExecutionContext& ctx, int label) {
    if (label == 0) {
      ++executions;
      std::uint64_t v;
      if (!ctx.guarded_load(*x, v)) return Step::restart();
      if (!ctx.begin_write_only()) return Step::restart();
      ctx.cas(*x, v, v + 1);
      locals.seen_x = v + 1;
      ctx.end_write_only(1);
      return Step::next(1);
    }
    std::uint64_t v;
    if (!ctx.guarded_load(*y, v)) return Step::restart();
    if (!ctx.begin_write_only()) return Step::restart();
    ctx.cas(*y, v, v + locals.seen_x);
    ctx.end_write_only(2);
    return Step::done();
  }
};

struct InjectAt final : ExecutionHook {
  int label;
  int remaining;
  void on_probe(const ProbeEvent& e) override {
    if (e.point == ProbePoint::kStep && e.label == label && remaining > 0) {
      --remaining;
      e.ctx->inject_restart();
    }
  }
};

}  // namespace

TEST(RunOperation, NoRestartsRunsOnce) {
  Runtime rt;
  auto c = settled(rt);
  std::uint64_t x = 0, y = 0;
  TwoIncrements op{&x, &y};
  run_operation(*c, op);
  EXPECT_EQ(op.executions, 1);
  EXPECT_EQ(x, 1u);
  EXPECT_EQ(y, 1u);
  EXPECT_EQ(c->stats().restarts, 0u);
}

TEST(RunOperation, RestartAfterFirstPeriodDoesNotRepeatIt) {
  Runtime rt;
  auto c = settled(rt);
  std::uint64_t x = 10, y = 0;
  InjectAt hook;
  hook.label = 1;
  hook.remaining = 3;
  c->set_hook(&hook);
  TwoIncrements op{&x, &y};
  run_operation(*c, op);
  EXPECT_EQ(op.executions, 1);
  EXPECT_EQ(x, 11u);
  EXPECT_EQ(y, 11u);
  EXPECT_EQ(c->stats().restarts, 3u);
}

TEST(RunOperation, RestartAtEntryRepeatsReadOnlyPart) {
  Runtime rt;
  auto c = settled(rt);
  std::uint64_t x = 0, y = 0;
  InjectAt hook;
  hook.label = 0;
  hook.remaining = 2;
  c->set_hook(&hook);
  TwoIncrements op{&x, &y};
  run_operation(*c, op);
  EXPECT_EQ(op.executions, 3);
  EXPECT_EQ(x, 1u);
  EXPECT_EQ(y, 1u);
}

TEST(EmulatedSwap, Table) {
  Runtime rt;
  auto c = settled(rt);
  std::uint64_t cell = 0xA0;
  EXPECT_EQ(emulated_swap(*c, cell, 0xB0), 0xA0u);
  EXPECT_EQ(cell, 0xB0u);
  EXPECT_EQ(emulated_swap(*c, cell, 0xB0), 0xB0u);
  EXPECT_EQ(cell, 0xB0u);
  EXPECT_TRUE(c->record().idle());
}

TEST(Registry, FullRegistryThrowsAndRecordsAreReused) {
  Runtime rt(RuntimeConfig{2});
  auto a = rt.register_thread();
  {
    auto b = rt.register_thread();
    EXPECT_THROW(rt.register_thread(), std::runtime_error);
  }
  EXPECT_NO_THROW(rt.register_thread());
}
