#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "freeaccess/bench.hpp"
#include "freeaccess/verify.hpp"

namespace py = pybind11;
using namespace freeaccess;

namespace {

template <class T, class F>
T parse(const std::string& s, F f, const char* what) {
  auto v = f(s);
  if (!v) throw py::value_error(std::string("unknown ") + what + " '" + s + "'");
  return *v;
}

// A set plus one session used from Python; calls release the GIL but the
// session itself must not be shared between Python threads.
class PySet {
 public:
  PySet(const std::string& scheme, const std::string& variant, const std::string& ds, std::size_t pool,
        std::size_t buckets, bool poison) {
    SetConfig c;
    c.scheme = parse<Scheme>(scheme, parse_scheme, "scheme");
    c.variant = parse<ListVariant>(variant, parse_variant, "variant");
    c.structure = parse<Structure>(ds, parse_structure, "ds");
    c.pool = pool;
    c.buckets = buckets;
    c.poison = poison;
    set_ = make_set(c);
    session_ = set_->open_session();
  }
  bool contains(std::int64_t k) {
    py::gil_scoped_release g;
    return session_->contains(k);
  }
  bool insert(std::int64_t k) {
    py::gil_scoped_release g;
    return session_->insert(k);
  }
  bool remove(std::int64_t k) {
    py::gil_scoped_release g;
    return session_->remove(k);
  }
  std::vector<std::int64_t> keys() const { return set_->keys(); }
  py::dict memory_report() {
    MemoryReport r = set_->memory_report();
    py::dict d;
    d["capacity"] = r.capacity;
    d["free"] = r.free;
    d["allocated"] = r.allocated;
    d["live"] = r.live;
    d["pending"] = r.pending;
    return d;
  }
  py::dict stats() const {
    SetStats s = set_->stats();
    py::dict d;
    d["reclaim_events"] = s.reclaim_events;
    d["reclaimed"] = s.reclaimed;
    d["restarts"] = s.restarts;
    return d;
  }

 private:
  std::unique_ptr<ConcurrentSet> set_;
  std::unique_ptr<SetSession> session_;
};

py::dict verdict(const Verdict& v) {
  py::dict d;
  d["pass"] = v.pass;
  d["detail"] = v.detail;
  return d;
}

}  // namespace

PYBIND11_MODULE(_freeaccess, m) {
  m.doc() = "Lock-free sets under tracing-based reclamation, with baselines and checks";

  m.def("encode", &encode, py::arg("dirty"), py::arg("phase"));
  m.def("decode", [](std::uint64_t w) {
    auto d = decode(w);
    return py::make_tuple(d.dirty, d.phase);
  });
  m.def("clear_tag", &clear_tag);
  m.attr("POISON") = kPoison;
  m.attr("MAX_PHASE") = kMaxPhase;

  py::class_<PySet>(m, "Set")
      .def(py::init<const std::string&, const std::string&, const std::string&, std::size_t, std::size_t, bool>(),
           py::arg("scheme") = "fa", py::arg("variant") = "hm", py::arg("ds") = "list", py::arg("pool") = 50000,
           py::arg("buckets") = 10000, py::arg("poison") = false)
      .def("contains", &PySet::contains)
      .def("insert", &PySet::insert)
      .def("remove", &PySet::remove)
      .def("__contains__", &PySet::contains)
      .def("keys", &PySet::keys)
      .def("memory_report", &PySet::memory_report)
      .def("stats", &PySet::stats);

  m.def(
      "bench",
      [](const std::vector<std::string>& schemes, const std::string& ds, const std::string& variant,
         std::int64_t range, std::size_t threads, double duration_secs, std::size_t repeats, const std::string& mix,
         std::size_t pool, std::uint64_t seed, const std::string& format) {
        std::vector<BenchResult> results;
        for (const auto& s : schemes) {
          BenchConfig c;
          c.scheme = parse<Scheme>(s, parse_scheme, "scheme");
          c.structure = parse<Structure>(ds, parse_structure, "ds");
          c.variant = parse<ListVariant>(variant, parse_variant, "variant");
          c.range = range;
          c.threads = threads;
          c.duration_secs = duration_secs;
          c.repeats = repeats;
          c.mix = parse<Mix>(mix, parse_mix, "mix");
          c.pool = pool;
          c.seed = seed;
          py::gil_scoped_release g;
          results.push_back(run_benchmark(c));
        }
        attach_nr_ratios(results);
        return report(results, format);
      },
      py::arg("schemes"), py::arg("ds") = "list", py::arg("variant") = "hm", py::arg("range") = 10000,
      py::arg("threads") = 1, py::arg("duration_secs") = 1.0, py::arg("repeats") = 10, py::arg("mix") = "50:25:25",
      py::arg("pool") = 50000, py::arg("seed") = 1, py::arg("format") = "json");

  m.def(
      "verify_alternation",
      [](const std::string& variant, std::size_t threads, std::size_t ops, std::uint64_t seed) {
        AlternationConfig c;
        c.variant = parse<ListVariant>(variant, parse_variant, "variant");
        c.threads = threads;
        c.ops_per_thread = ops;
        c.seed = seed;
        py::gil_scoped_release g;
        auto r = run_alternation(c);
        py::gil_scoped_acquire a;
        return verdict(r.verdict);
      },
      py::arg("variant") = "hm", py::arg("threads") = 4, py::arg("ops") = 100000, py::arg("seed") = 1);
  m.def(
      "verify_stuck",
      [](const std::string& scheme, double budget_secs) {
        StuckConfig c;
        c.scheme = parse<Scheme>(scheme, parse_scheme, "scheme");
        c.budget_secs = budget_secs;
        py::gil_scoped_release g;
        auto r = stuck_thread_progress(c);
        py::gil_scoped_acquire a;
        auto d = verdict(r.verdict);
        d["events_while_suspended"] = r.events_while_suspended;
        d["reclaimed_late"] = r.reclaimed_late;
        return d;
      },
      py::arg("scheme") = "fa", py::arg("budget_secs") = 10.0);
  m.def(
      "verify_poison",
      [](const std::string& variant, std::size_t threads, std::size_t ops, std::uint64_t min_phases) {
        PoisonConfig c;
        c.variant = parse<ListVariant>(variant, parse_variant, "variant");
        c.threads = threads;
        c.total_ops = ops;
        c.min_phases = min_phases;
        py::gil_scoped_release g;
        auto r = poison_audit(c);
        py::gil_scoped_acquire a;
        auto d = verdict(r.verdict);
        d["phases"] = r.phases;
        d["certified_poison"] = r.certified_poison;
        return d;
      },
      py::arg("variant") = "hm", py::arg("threads") = 4, py::arg("ops") = 1000000, py::arg("min_phases") = 50);
  m.def(
      "verify_swap",
      [](std::size_t n, std::size_t trials, std::uint64_t seed) {
        py::gil_scoped_release g;
        auto v = swap_chain_check(n, trials, seed);
        py::gil_scoped_acquire a;
        return verdict(v);
      },
      py::arg("n"), py::arg("trials") = 1000, py::arg("seed") = 1);
}
