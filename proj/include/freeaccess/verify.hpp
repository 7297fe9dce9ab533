#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "freeaccess/bench.hpp"
#include "freeaccess/sets.hpp"

namespace freeaccess {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Event {
  OpType op;
  std::int64_t key;
  bool result;
  std::uint64_t begin;
  std::uint64_t end;
  std::size_t thread;
};

std::string to_string(const Event& e);

/// Per-thread program-ordered logs stamped from one shared ticket clock.
class EventLog {
 public:
  explicit EventLog(std::size_t threads) : logs_(threads) {}

  std::uint64_t tick() noexcept { return clock_.fetch_add(1, std::memory_order_seq_cst); }
  void record(std::size_t thread, const Event& e) { logs_[thread].push_back(e); }
  /// Runs op on session with begin/end stamps and logs it.
  bool apply(std::size_t thread, SetSession& session, OpType op, std::int64_t key);

  const std::vector<std::vector<Event>>& threads() const noexcept { return logs_; }
  std::size_t size() const noexcept;

 private:
  std::atomic<std::uint64_t> clock_{1};
  std::vector<std::vector<Event>> logs_;
};

/// Per key, successful inserts and removes must admit an order consistent
/// with their intervals that alternates from the initial membership, and the
/// final membership must match the parity.
Verdict alternation_check(const EventLog& log, const std::set<std::int64_t>& initial,
                          const std::vector<std::int64_t>& final_keys);

struct AlternationConfig {
  ListVariant variant = ListVariant::kHm;
  Scheme scheme = Scheme::kFa;
  std::size_t threads = 4;
  std::size_t ops_per_thread = 100000;
  std::int64_t keys = 16;
  std::size_t pool = 256;
  std::uint64_t seed = 1;
  bool inject_restarts = true;
};

struct AlternationResult {
  Verdict verdict;
  std::uint64_t injected = 0;
  std::uint64_t restarts = 0;
  std::uint64_t phases = 0;
};

AlternationResult run_alternation(const AlternationConfig& config);

/// One suspension: thread, program point, and when to let it go.
struct Suspension {
  std::size_t thread = 0;
  ProbePoint point = ProbePoint::kTraversal;
  /// Resume after this many reclamation events; nullopt = at the end of the budget.
  std::optional<std::uint64_t> resume_after;
};

/// Lines "thread:label:resume" with label traversal|write-only|step and
/// resume a count or "manual". Blank lines and '#' comments are skipped.
std::vector<Suspension> parse_script(std::string_view text);

struct StuckConfig {
  Scheme scheme = Scheme::kFa;
  ListVariant variant = ListVariant::kHm;
  std::size_t threads = 4;
  std::int64_t range = 128;
  std::size_t pool = 1000;
  std::size_t hp_threshold = 64;
  std::uint64_t min_events = 10;
  double budget_secs = 10.0;
  std::uint64_t seed = 1;
  std::vector<Suspension> script = {Suspension{0, ProbePoint::kTraversal, 12}};
};

struct StuckResult {
  Verdict verdict;
  /// FA phases, HP scans or EBR epoch advances while the thread was held.
  std::uint64_t events_while_suspended = 0;
  std::uint64_t reclaimed_while_suspended = 0;
  /// Nodes reclaimed in the second half of the suspension window.
  std::uint64_t reclaimed_late = 0;
  bool suspended = false;
  bool exhausted = false;
  std::string exhaustion;
  Verdict after_resume;
};

StuckResult stuck_thread_progress(const StuckConfig& config);

struct PoisonConfig {
  ListVariant variant = ListVariant::kHm;
  std::size_t threads = 4;
  std::size_t total_ops = 1000000;
  std::int64_t range = 256;
  std::size_t pool = 2000;
  std::uint64_t seed = 1;
  std::uint64_t min_phases = 50;
};

struct PoisonResult {
  Verdict verdict;
  std::uint64_t phases = 0;
  std::uint64_t certified_poison = 0;
  std::uint64_t writes_to_free_nodes = 0;
  std::uint64_t writes_outside_period = 0;
  std::uint64_t restarts = 0;
  double seconds = 0;
};

/// Randomized run with poison-on-sweep and certification audit on.
PoisonResult poison_audit(const PoisonConfig& config);

struct ScheduleResult {
  std::uint64_t certified_poison = 0;
  std::uint64_t writes_to_free_nodes = 0;
  std::uint64_t writes_outside_period = 0;
  std::size_t stale_roots = 0;
  bool detected() const noexcept {
    return certified_poison + writes_to_free_nodes + writes_outside_period + stale_roots != 0;
  }
};

/// Deterministic two-thread schedule aimed at the given seeded bug. With
/// mutation kNone every schedule is run and must come out clean.
ScheduleResult mutation_schedule(Mutation mutation, ListVariant variant = ListVariant::kHhs);
std::optional<Mutation> parse_mutation(std::string_view s) noexcept;
std::string_view to_string(Mutation m) noexcept;

/// n threads swap distinct values into one cell; returned values plus the
/// final value must form one exchange chain from the initial value.
Verdict swap_chain_check(std::size_t n, std::size_t trials, std::uint64_t seed = 1);

/// Chain property for one outcome: returned[i] is what swap i replaced.
bool is_swap_chain(std::uint64_t initial, const std::vector<std::uint64_t>& swapped_in,
                   const std::vector<std::uint64_t>& returned, std::uint64_t final_value);

/// All outcomes a sequential execution in some order can produce.
std::vector<std::pair<std::vector<std::uint64_t>, std::uint64_t>> swap_outcomes(
    std::uint64_t initial, const std::vector<std::uint64_t>& swapped_in);

}  // namespace freeaccess
