#pragma once

// Random frozen heaps for checking concurrent trace+sweep against plain
// sequential reachability.

#include <barrier>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "freeaccess/runtime.hpp"
#include "freeaccess/tracer.hpp"

namespace heap_oracle {

using namespace freeaccess;

struct TrialResult {
  bool ok = true;
  std::string detail;
  std::size_t reclaimed = 0;
  std::size_t expected = 0;
};

inline NodeLayout three_link_layout() { return NodeLayout{32, {0, 8, 16}}; }

/// Reachable set from roots following untagged in-arena links.
inline std::set<std::uint64_t> reachable(const Arena& arena, const std::vector<std::uint64_t>& roots) {
  std::set<std::uint64_t> seen;
  std::vector<std::uint64_t> todo;
  for (auto r : roots) {
    auto c = clear_tag(r);
    if (arena.owns(c) && seen.insert(c).second) todo.push_back(c);
  }
  while (!todo.empty()) {
    NodeRef n(todo.back());
    todo.pop_back();
    for (auto off : arena.layout().link_offsets) {
      auto c = clear_tag(load_word(n.word(off / 8)));
      if (arena.owns(c) && seen.insert(c).second) todo.push_back(c);
    }
  }
  return seen;
}

/// Builds a random heap of at most max_nodes nodes, runs `rounds` phases each
/// driven by `helpers` concurrent threads, rewiring between rounds, and
/// compares the survivors with the sequential oracle after every phase.
inline TrialResult run_trial(std::uint64_t seed, std::size_t helpers, std::size_t max_nodes = 64,
                             int rounds = 2) {
  std::mt19937_64 rng(seed);
  Runtime rt(RuntimeConfig{helpers + 2});
  Arena arena(max_nodes, three_link_layout());
  rt.attach(arena);
  std::vector<std::uint64_t> cells(3, kNullRef);
  arena.register_global_roots(cells);

  std::vector<std::uint64_t> live;
  auto random_link = [&]() -> std::uint64_t {
    switch (rng() % 8) {
      case 0: return kNullRef;
      case 1: return 0x10;  // outside every arena
      default: {
        if (live.empty()) return kNullRef;
        auto v = live[rng() % live.size()];
        return (rng() % 4 == 0) ? with_tag(v) : v;
      }
    }
  };

  TrialResult out;
  for (int round = 0; round < rounds; ++round) {
    std::size_t want = 1 + rng() % max_nodes;
    while (live.size() < want) {
      auto n = arena.try_pop(rt.phase());
      if (!n) break;
      live.push_back(n->raw());
    }
    for (auto v : live) {
      NodeRef n(v);
      for (std::size_t w = 0; w < 4; ++w) store_word(n.word(w), random_link());
    }
    for (auto& c : cells) c = random_link();

    auto expect_live = reachable(arena, cells);
    std::size_t before = rt.tracer().reclaimed_total();
    std::barrier go(static_cast<std::ptrdiff_t>(helpers));
    std::vector<std::thread> ts;
    for (std::size_t h = 0; h < helpers; ++h) {
      ts.emplace_back([&] {
        auto ctx = rt.register_thread();
        go.arrive_and_wait();
        rt.reclamation_phase(*ctx);
        ctx->settle();
      });
    }
    for (auto& t : ts) t.join();

    std::size_t reclaimed = rt.tracer().reclaimed_total() - before;
    std::size_t expected = live.size() - expect_live.size();
    out.reclaimed += reclaimed;
    out.expected += expected;
    std::vector<std::uint64_t> next;
    for (auto v : live) {
      bool alive = arena.is_allocated(NodeRef(v));
      if (alive != (expect_live.count(v) != 0)) {
        out.ok = false;
        out.detail = "seed " + std::to_string(seed) + " round " + std::to_string(round) + ": node " +
                     std::to_string(arena.index_of(NodeRef(v))) + (alive ? " survived" : " was reclaimed");
        return out;
      }
      if (alive) next.push_back(v);
    }
    if (reclaimed != expected) {
      out.ok = false;
      out.detail = "seed " + std::to_string(seed) + ": reclaimed " + std::to_string(reclaimed) + ", expected " +
                   std::to_string(expected);
      return out;
    }
    live = std::move(next);
  }
  return out;
}

}  // namespace heap_oracle
