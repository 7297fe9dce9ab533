#include "freeaccess/verify.hpp"

#include <algorithm>
#include <barrier>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace freeaccess {

namespace {

const char* op_name(OpType op) {
  switch (op) {
    case OpType::kContains: return "contains";
    case OpType::kInsert: return "ins";
    case OpType::kRemove: return "rem";
  }
  return "?";
}

bool apply_op(SetSession& s, OpType op, std::int64_t key) {
  switch (op) {
    case OpType::kContains: return s.contains(key);
    case OpType::kInsert: return s.insert(key);
    case OpType::kRemove: return s.remove(key);
  }
  return false;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string to_string(const Event& e) {
  std::ostringstream os;
  os << op_name(e.op) << "(" << e.key << ")=" << (e.result ? "true" : "false") << " by T" << e.thread
     << " @[" << e.begin << "," << e.end << "]";
  return os.str();
}

bool EventLog::apply(std::size_t thread, SetSession& session, OpType op, std::int64_t key) {
  std::uint64_t b = tick();
  bool r = apply_op(session, op, key);
  std::uint64_t e = tick();
  record(thread, Event{op, key, r, b, e, thread});
  return r;
}

std::size_t EventLog::size() const noexcept {
  std::size_t n = 0;
  for (const auto& l : logs_) n += l.size();
  return n;
}

Verdict alternation_check(const EventLog& log, const std::set<std::int64_t>& initial,
                          const std::vector<std::int64_t>& final_keys) {
  std::map<std::int64_t, std::vector<Event>> per_key;
  for (const auto& thread_log : log.threads()) {
    for (const Event& e : thread_log) {
      if (e.result && e.op != OpType::kContains) per_key[e.key].push_back(e);
    }
  }
  std::set<std::int64_t> final_set(final_keys.begin(), final_keys.end());
  std::set<std::int64_t> all_keys = initial;
  for (const auto& [k, _] : per_key) all_keys.insert(k);
  all_keys.insert(final_set.begin(), final_set.end());

  std::size_t checked = 0;
  for (std::int64_t key : all_keys) {
    std::vector<Event>& ev = per_key[key];
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.begin < b.begin; });
    bool present = initial.count(key) != 0;
    std::multiset<std::uint64_t> ends;
    for (const Event& e : ev) ends.insert(e.end);
    // Candidates: events no remaining event strictly precedes, keyed by end.
    std::set<std::pair<std::uint64_t, std::size_t>> cand[2];
    std::size_t next = 0;
    const Event* last = nullptr;
    for (std::size_t applied = 0; applied < ev.size(); ++applied) {
      std::uint64_t min_end = *ends.begin();
      while (next < ev.size() && ev[next].begin < min_end) {
        cand[ev[next].op == OpType::kInsert ? 0 : 1].insert({ev[next].end, next});
        ++next;
      }
      int need = present ? 1 : 0;
      if (cand[need].empty()) {
        const Event& blocker = ev[cand[1 - need].begin()->second];
        std::string detail = "key " + std::to_string(key) + ": expected " +
                             (present ? "a remove" : "an insert") + " next but " + to_string(blocker) +
                             " must come first";
        if (last != nullptr) detail += "; previous " + to_string(*last);
        return {false, detail};
      }
      auto it = cand[need].begin();
      last = &ev[it->second];
      ends.erase(ends.find(it->first));
      cand[need].erase(it);
      present = !present;
    }
    if (present != (final_set.count(key) != 0)) {
      return {false, "key " + std::to_string(key) + ": final membership " +
                         (final_set.count(key) ? "present" : "absent") + " contradicts parity of " +
                         std::to_string(ev.size()) + " successful updates"};
    }
    checked += ev.size();
  }
  return {true, std::to_string(checked) + " successful updates over " + std::to_string(all_keys.size()) +
                    " keys alternate"};
}

// ------------------------------------------------------------ alternation

namespace {

/// Raises the thread's dirty flag when the step label matches the label of
/// the current rotation slot; the slot advances on every step probe.
class RestartInjector final : public ExecutionHook {
 public:
  explicit RestartInjector(int labels) : labels_(labels) {}
  void on_probe(const ProbeEvent& e) override {
    if (e.point != ProbePoint::kStep || e.ctx == nullptr) return;
    int target = static_cast<int>(count_++ % static_cast<std::uint64_t>(labels_));
    if (e.label == target) {
      e.ctx->inject_restart();
      ++injected_;
    }
  }
  std::uint64_t injected() const noexcept { return injected_; }

 private:
  int labels_;
  std::uint64_t count_ = 0;
  std::uint64_t injected_ = 0;
};

}  // namespace

AlternationResult run_alternation(const AlternationConfig& cfg) {
  SetConfig sc;
  sc.variant = cfg.variant;
  sc.scheme = cfg.scheme;
  sc.pool = cfg.pool;
  sc.exact_pool = true;
  sc.threads = cfg.threads;
  sc.hp_threshold = 32;
  sc.max_threads = std::max<std::size_t>(64, cfg.threads + 2);
  auto set = make_set(sc);
  EventLog log(cfg.threads);
  std::vector<RestartInjector> injectors(cfg.threads, RestartInjector(6));
  std::vector<std::thread> workers;
  std::vector<std::string> errors(cfg.threads);
  std::barrier start(static_cast<std::ptrdiff_t>(cfg.threads));
  for (std::size_t t = 0; t < cfg.threads; ++t) {
    workers.emplace_back([&, t] {
      auto s = set->open_session();
      if (cfg.inject_restarts) s->set_hook(&injectors[t]);
      OpGenerator gen(cfg.seed, 0, t, cfg.keys, Mix{20, 40, 40});
      start.arrive_and_wait();
      try {
        for (std::size_t i = 0; i < cfg.ops_per_thread; ++i) {
          auto [op, key] = gen.next();
          log.apply(t, *s, op, key);
        }
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
    });
  }
  for (auto& w : workers) w.join();

  AlternationResult r;
  for (const auto& inj : injectors) r.injected += inj.injected();
  SetStats st = set->stats();
  r.restarts = st.restarts;
  r.phases = st.reclaim_events;
  for (std::size_t t = 0; t < cfg.threads; ++t) {
    if (!errors[t].empty()) {
      r.verdict = {false, "thread " + std::to_string(t) + " failed: " + errors[t]};
      return r;
    }
  }
  r.verdict = alternation_check(log, {}, set->keys());
  return r;
}

// ------------------------------------------------------------ suspension

std::vector<Suspension> parse_script(std::string_view text) {
  std::vector<Suspension> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }),
               line.end());
    if (line.empty()) continue;
    auto bad = [&] {
      return std::invalid_argument("script line " + std::to_string(lineno) +
                                   ": expected thread:label:resume, got '" + line + "'");
    };
    auto c1 = line.find(':');
    auto c2 = c1 == std::string::npos ? c1 : line.find(':', c1 + 1);
    if (c2 == std::string::npos) throw bad();
    Suspension s;
    std::string_view tid(line.data(), c1);
    if (std::from_chars(tid.data(), tid.data() + tid.size(), s.thread).ec != std::errc()) throw bad();
    std::string label = line.substr(c1 + 1, c2 - c1 - 1);
    if (label == "traversal") {
      s.point = ProbePoint::kTraversal;
    } else if (label == "write-only") {
      s.point = ProbePoint::kWriteOnlyEntry;
    } else if (label == "step") {
      s.point = ProbePoint::kStep;
    } else {
      throw bad();
    }
    std::string resume = line.substr(c2 + 1);
    if (resume != "manual") {
      std::uint64_t n = 0;
      auto [p, ec] = std::from_chars(resume.data(), resume.data() + resume.size(), n);
      if (ec != std::errc() || p != resume.data() + resume.size()) throw bad();
      s.resume_after = n;
    }
    for (const auto& prev : out) {
      if (prev.thread == s.thread) throw std::invalid_argument("two suspensions for one thread");
    }
    out.push_back(s);
  }
  return out;
}

namespace {

/// Blocks the owning thread at the nth hit of a program point until released.
class Gate final : public ExecutionHook {
 public:
  Gate(ProbePoint point, std::uint64_t nth = 1) : point_(point), nth_(nth) {}

  void arm() noexcept { armed_.store(true); }
  void on_probe(const ProbeEvent& e) override {
    if (e.point != point_ || !armed_.load(std::memory_order_relaxed) || fired_) return;
    if (++hits_ < nth_) return;
    fired_ = true;
    std::unique_lock lock(mu_);
    held_ = true;
    cv_.notify_all();
    cv_.wait(lock, [&] { return released_; });
  }
  bool wait_held(double secs) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, std::chrono::duration<double>(secs), [&] { return held_; });
  }
  bool held() {
    std::lock_guard lock(mu_);
    return held_;
  }
  void release() {
    std::lock_guard lock(mu_);
    released_ = true;
    cv_.notify_all();
  }

 private:
  ProbePoint point_;
  std::uint64_t nth_;
  std::uint64_t hits_ = 0;
  bool fired_ = false;
  std::atomic<bool> armed_{false};
  std::mutex mu_;
  std::condition_variable cv_;
  bool held_ = false;
  bool released_ = false;
};

}  // namespace

StuckResult stuck_thread_progress(const StuckConfig& cfg) {
  for (const auto& s : cfg.script) {
    if (s.thread >= cfg.threads) throw std::invalid_argument("script names a thread beyond --threads");
  }
  SetConfig sc;
  sc.scheme = cfg.scheme;
  sc.variant = cfg.variant;
  sc.pool = cfg.pool;
  sc.exact_pool = true;
  sc.threads = cfg.threads;
  sc.hp_threshold = cfg.hp_threshold;
  sc.max_threads = std::max<std::size_t>(64, cfg.threads + 2);
  auto set = make_set(sc);
  std::set<std::int64_t> initial;
  {
    auto s = set->open_session();
    for (std::int64_t k : prefill_keys(cfg.range, cfg.seed)) s->insert(k);
    auto ks = set->keys();
    initial.insert(ks.begin(), ks.end());
  }

  std::vector<std::unique_ptr<Gate>> gates(cfg.threads);
  for (const auto& s : cfg.script) gates[s.thread] = std::make_unique<Gate>(s.point);

  EventLog log(cfg.threads);
  std::atomic<bool> stop{false};
  std::atomic<bool> exhausted{false};
  std::string exhaustion;
  std::mutex ex_mu;
  std::vector<std::atomic<std::uint64_t>> done(cfg.threads);
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < cfg.threads; ++t) {
    workers.emplace_back([&, t] {
      auto s = set->open_session();
      if (gates[t]) s->set_hook(gates[t].get());
      OpGenerator gen(cfg.seed, 1, t, cfg.range, Mix{50, 25, 25});
      try {
        while (!stop.load(std::memory_order_relaxed)) {
          auto [op, key] = gen.next();
          log.apply(t, *s, op, key);
          if (done[t].fetch_add(1, std::memory_order_relaxed) == 64 && gates[t]) gates[t]->arm();
        }
      } catch (const ArenaExhausted& e) {
        std::lock_guard lock(ex_mu);
        if (!exhausted.exchange(true)) exhaustion = e.what();
        stop.store(true);
      }
    });
  }

  StuckResult r;
  auto t0 = Clock::now();
  bool all_held = true;
  for (const auto& s : cfg.script) {
    double left = cfg.budget_secs - seconds_since(t0);
    all_held = all_held && gates[s.thread]->wait_held(std::max(left, 0.0));
  }
  r.suspended = all_held && !cfg.script.empty();

  std::vector<std::pair<double, std::uint64_t>> samples;
  auto ts = Clock::now();
  SetStats base = set->stats();
  samples.push_back({0.0, base.reclaimed});
  if (r.suspended) {
    for (;;) {
      SetStats now = set->stats();
      samples.push_back({seconds_since(ts), now.reclaimed});
      bool ready = true;
      for (const auto& s : cfg.script) {
        if (!s.resume_after || now.reclaim_events - base.reclaim_events < *s.resume_after) ready = false;
      }
      if (ready || exhausted.load() || seconds_since(t0) >= cfg.budget_secs) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  }
  SetStats at_release = set->stats();
  r.events_while_suspended = at_release.reclaim_events - base.reclaim_events;
  r.reclaimed_while_suspended = at_release.reclaimed - base.reclaimed;
  double half = seconds_since(ts) / 2;
  std::uint64_t mid = base.reclaimed;
  for (const auto& [t, v] : samples) {
    if (t <= half) mid = v;
  }
  r.reclaimed_late = at_release.reclaimed - mid;

  for (auto& g : gates) {
    if (g) g->release();
  }
  // Let everyone, the released threads included, run a little longer.
  std::vector<std::uint64_t> mark(cfg.threads);
  for (std::size_t t = 0; t < cfg.threads; ++t) mark[t] = done[t].load();
  auto tr = Clock::now();
  while (!stop.load() && seconds_since(tr) < 2.0) {
    bool all = true;
    for (std::size_t t = 0; t < cfg.threads; ++t) all = all && done[t].load() >= mark[t] + 200;
    if (all) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  stop.store(true);
  for (auto& w : workers) w.join();

  r.exhausted = exhausted.load();
  r.exhaustion = exhaustion;
  r.after_resume = alternation_check(log, initial, set->keys());

  std::ostringstream os;
  os << to_string(cfg.scheme) << ": " << r.events_while_suspended << " reclamation events and "
     << r.reclaimed_while_suspended << " nodes reclaimed while suspended";
  if (!r.suspended) os << "; suspension never took effect";
  if (r.exhausted) os << "; " << r.exhaustion;
  if (!r.after_resume.pass) os << "; after resume: " << r.after_resume.detail;
  r.verdict.pass = r.suspended && !r.exhausted && r.events_while_suspended >= cfg.min_events &&
                   r.after_resume.pass;
  r.verdict.detail = os.str();
  return r;
}

// ------------------------------------------------------------ poison

PoisonResult poison_audit(const PoisonConfig& cfg) {
  SetConfig sc;
  sc.variant = cfg.variant;
  sc.scheme = Scheme::kFa;
  sc.pool = cfg.pool;
  sc.exact_pool = true;
  sc.poison = true;
  sc.audit = true;
  sc.threads = cfg.threads;
  sc.max_threads = std::max<std::size_t>(64, cfg.threads + 2);
  auto set = make_set(sc);
  {
    auto s = set->open_session();
    for (std::int64_t k : prefill_keys(cfg.range, cfg.seed)) s->insert(k);
  }
  auto t0 = Clock::now();
  std::vector<std::thread> workers;
  std::vector<std::string> errors(cfg.threads);
  std::size_t per = cfg.total_ops / cfg.threads;
  for (std::size_t t = 0; t < cfg.threads; ++t) {
    workers.emplace_back([&, t] {
      auto s = set->open_session();
      OpGenerator gen(cfg.seed, 2, t, cfg.range, Mix{50, 25, 25});
      try {
        for (std::size_t i = 0; i < per; ++i) {
          auto [op, key] = gen.next();
          apply_op(*s, op, key);
        }
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
    });
  }
  for (auto& w : workers) w.join();
  PoisonResult r;
  r.seconds = seconds_since(t0);
  SetStats st = set->stats();
  r.phases = st.reclaim_events;
  r.certified_poison = st.certified_poison;
  r.writes_to_free_nodes = st.writes_to_free_nodes;
  r.writes_outside_period = st.writes_outside_period;
  r.restarts = st.restarts;
  std::ostringstream os;
  os << per * cfg.threads << " ops, " << r.phases << " phases, " << r.certified_poison
     << " certified poison values, " << r.writes_to_free_nodes << " writes to free nodes, "
     << r.writes_outside_period << " writes outside write-only periods";
  bool ok = r.certified_poison == 0 && r.writes_to_free_nodes == 0 && r.writes_outside_period == 0;
  for (std::size_t t = 0; t < cfg.threads; ++t) {
    if (!errors[t].empty()) {
      ok = false;
      os << "; thread " << t << " failed: " << errors[t];
    }
  }
  if (r.phases < cfg.min_phases) {
    ok = false;
    os << "; fewer than " << cfg.min_phases << " phases";
  }
  r.verdict = {ok, os.str()};
  return r;
}

std::optional<Mutation> parse_mutation(std::string_view s) noexcept {
  if (s == "none") return Mutation::kNone;
  if (s == "skip-validate") return Mutation::kSkipValidate;
  if (s == "skip-fence") return Mutation::kSkipFence;
  if (s == "skip-marker") return Mutation::kSkipMarker;
  return std::nullopt;
}

std::string_view to_string(Mutation m) noexcept {
  switch (m) {
    case Mutation::kNone: return "none";
    case Mutation::kSkipValidate: return "skip-validate";
    case Mutation::kSkipFence: return "skip-fence";
    case Mutation::kSkipMarker: return "skip-marker";
  }
  return "?";
}

namespace {

std::unique_ptr<ConcurrentSet> schedule_set(Mutation m, ListVariant variant) {
  SetConfig sc;
  sc.variant = variant;
  sc.scheme = Scheme::kFa;
  sc.pool = 64;
  sc.exact_pool = true;
  sc.poison = true;
  sc.audit = true;
  sc.mutation = m;
  return make_set(sc);
}

void force_phase(ConcurrentSet& set, SetSession& s) {
  ExecutionContext* c = s.context();
  set.runtime()->reclamation_phase(*c);
  c->settle();
}

void add(ScheduleResult& into, const ConcurrentSet& set) {
  SetStats st = set.stats();
  into.certified_poison += st.certified_poison;
  into.writes_to_free_nodes += st.writes_to_free_nodes;
  into.writes_outside_period += st.writes_outside_period;
}

// A reader holds a node across its removal and a full phase.
void stale_read_schedule(Mutation m, ListVariant variant, ScheduleResult& out) {
  auto set = schedule_set(m, variant);
  auto main = set->open_session();
  for (std::int64_t k : {10, 20, 30}) main->insert(k);
  auto reader = set->open_session();
  Gate gate(ProbePoint::kTraversal, 2);
  gate.arm();
  reader->set_hook(&gate);
  std::thread t([&] { reader->contains(30); });
  gate.wait_held(10.0);
  main->remove(10);
  main->remove(20);
  force_phase(*set, *main);
  gate.release();
  t.join();
  add(out, *set);
}

// A writer publishes its frame around the entry check of a write-only period
// while the node it will write through is removed and swept.
void write_entry_schedule(Mutation m, ListVariant variant, ScheduleResult& out) {
  auto set = schedule_set(m, variant);
  auto main = set->open_session();
  for (std::int64_t k : {10, 20, 30}) main->insert(k);
  auto writer = set->open_session();
  Gate gate(ProbePoint::kWriteOnlyEntry, 1);
  gate.arm();
  writer->set_hook(&gate);
  std::thread t([&] { writer->insert(25); });
  gate.wait_held(10.0);
  main->remove(20);
  force_phase(*set, *main);
  gate.release();
  t.join();
  add(out, *set);
}

// A finished operation must leave no roots behind.
void idle_roots_schedule(Mutation m, ListVariant variant, ScheduleResult& out) {
  auto set = schedule_set(m, variant);
  auto s = set->open_session();
  s->insert(5);
  s->insert(7);
  s->remove(5);
  std::vector<std::uint64_t> roots;
  set->runtime()->gather_local_roots(roots);
  out.stale_roots += roots.size();
  add(out, *set);
}

}  // namespace

ScheduleResult mutation_schedule(Mutation mutation, ListVariant variant) {
  ScheduleResult r;
  switch (mutation) {
    case Mutation::kSkipValidate:
      stale_read_schedule(mutation, variant, r);
      break;
    case Mutation::kSkipFence:
      write_entry_schedule(mutation, variant, r);
      break;
    case Mutation::kSkipMarker:
      idle_roots_schedule(mutation, variant, r);
      break;
    case Mutation::kNone:
      stale_read_schedule(mutation, variant, r);
      write_entry_schedule(mutation, variant, r);
      idle_roots_schedule(mutation, variant, r);
      break;
  }
  return r;
}

// ------------------------------------------------------------ swap

bool is_swap_chain(std::uint64_t initial, const std::vector<std::uint64_t>& swapped_in,
                   const std::vector<std::uint64_t>& returned, std::uint64_t final_value) {
  if (swapped_in.size() != returned.size()) return false;
  std::map<std::uint64_t, std::size_t> by_returned;
  for (std::size_t i = 0; i < returned.size(); ++i) {
    if (!by_returned.emplace(returned[i], i).second) return false;
  }
  std::uint64_t cur = initial;
  for (std::size_t step = 0; step < returned.size(); ++step) {
    auto it = by_returned.find(cur);
    if (it == by_returned.end()) return false;
    cur = swapped_in[it->second];
    by_returned.erase(it);
  }
  return cur == final_value;
}

std::vector<std::pair<std::vector<std::uint64_t>, std::uint64_t>> swap_outcomes(
    std::uint64_t initial, const std::vector<std::uint64_t>& swapped_in) {
  std::vector<std::size_t> order(swapped_in.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::pair<std::vector<std::uint64_t>, std::uint64_t>> out;
  do {
    std::vector<std::uint64_t> ret(swapped_in.size());
    std::uint64_t cell = initial;
    for (std::size_t i : order) {
      ret[i] = cell;
      cell = swapped_in[i];
    }
    out.emplace_back(std::move(ret), cell);
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

Verdict swap_chain_check(std::size_t n, std::size_t trials, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("swap chain needs at least one swapper");
  Runtime rt(RuntimeConfig{std::max<std::size_t>(64, n + 1)});
  const std::uint64_t initial = 8000;
  std::vector<std::uint64_t> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = 8 * (i + 1);
  std::vector<std::pair<std::vector<std::uint64_t>, std::uint64_t>> oracle;
  if (n <= 3) oracle = swap_outcomes(initial, values);

  alignas(64) std::uint64_t cell = initial;
  std::vector<std::uint64_t> returned(n);
  std::barrier sync(static_cast<std::ptrdiff_t>(n + 1));
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < n; ++i) {
    threads.emplace_back([&, i] {
      auto ctx = rt.register_thread();
      std::mt19937_64 rng(seed * 7919 + i);
      for (std::size_t trial = 0; trial < trials; ++trial) {
        sync.arrive_and_wait();
        unsigned r = static_cast<unsigned>(rng() % 8);
        if (r == 0) std::this_thread::yield();
        if (r == 1) ctx->inject_restart();
        returned[i] = emulated_swap(*ctx, cell, values[i]);
        sync.arrive_and_wait();
      }
    });
  }
  std::set<std::vector<std::uint64_t>> seen;
  Verdict v{true, ""};
  for (std::size_t trial = 0; trial < trials; ++trial) {
    store_word(cell, initial);
    sync.arrive_and_wait();
    sync.arrive_and_wait();
    std::uint64_t fin = load_word(cell);
    if (v.pass && !is_swap_chain(initial, values, returned, fin)) {
      v = {false, "trial " + std::to_string(trial) + " broke the exchange chain"};
    }
    if (v.pass && !oracle.empty()) {
      bool found = std::any_of(oracle.begin(), oracle.end(), [&](const auto& o) {
        return o.first == returned && o.second == fin;
      });
      if (!found) v = {false, "trial " + std::to_string(trial) + " produced an outcome no serial order gives"};
    }
    std::vector<std::uint64_t> key = returned;
    key.push_back(fin);
    seen.insert(std::move(key));
  }
  for (auto& t : threads) t.join();
  if (v.pass) {
    v.detail = std::to_string(trials) + " trials of " + std::to_string(n) + " swaps, " +
               std::to_string(seen.size()) + " distinct outcomes";
    if (!oracle.empty()) v.detail += " of " + std::to_string(oracle.size()) + " possible";
  }
  return v;
}

}  // namespace freeaccess
