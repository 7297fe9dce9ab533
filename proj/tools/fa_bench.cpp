// fa_bench: throughput runs and verification suites for the set implementations.
//
//   fa_bench run --ds list --scheme fa,hp,ebr,nr --range 256 --threads sweep
//   fa_bench verify stuck --scheme ebr --script suspend.txt

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "freeaccess/bench.hpp"
#include "freeaccess/verify.hpp"

using namespace freeaccess;

namespace {

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T, class F>
T parse_or_throw(const std::string& s, F parse, const char* what) {
  auto v = parse(s);
  if (!v) throw CLI::ValidationError(what, "unknown value '" + s + "'");
  return *v;
}

std::vector<std::size_t> thread_counts(const std::string& text) {
  std::vector<std::size_t> out;
  if (text == "sweep") {
    std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t t = 1; t <= hw; t *= 2) out.push_back(t);
    return out;
  }
  for (const auto& s : split(text)) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || v == 0) throw CLI::ValidationError("--threads", "bad thread count '" + s + "'");
    out.push_back(v);
  }
  return out;
}

struct Shared {
  std::string ds = "list";
  std::string variant = "hm";
  std::string scheme = "fa";
  std::int64_t range = 0;
  std::string threads = "1";
  double duration = 1.0;
  std::size_t repeats = 10;
  std::string mix = "50:25:25";
  std::size_t pool = 50000;
  std::uint64_t seed = 1;
  std::string format = "table";
  std::string out;
  bool poison = false;
  std::size_t buckets = 10000;
};

void add_shared(CLI::App* app, Shared& s) {
  app->add_option("--ds", s.ds, "list or hash")->capture_default_str();
  app->add_option("--variant", s.variant, "hhs, hm or harris")->capture_default_str();
  app->add_option("--scheme", s.scheme, "comma list of fa, hp, ebr, nr")->capture_default_str();
  app->add_option("--range", s.range, "key range (default 2x buckets for hash, 10000 for list)");
  app->add_option("--threads", s.threads, "comma list or 'sweep'")->capture_default_str();
  app->add_option("--duration-secs", s.duration, "seconds per repeat")->capture_default_str();
  app->add_option("--repeats", s.repeats)->capture_default_str();
  app->add_option("--mix", s.mix, "contains:insert:remove percentages")->capture_default_str();
  app->add_option("--pool", s.pool, "node pool size")->capture_default_str();
  app->add_option("--buckets", s.buckets, "hash buckets")->capture_default_str();
  app->add_option("--seed", s.seed)->capture_default_str();
  app->add_option("--format", s.format, "csv, json or table")->capture_default_str();
  app->add_option("--out", s.out, "write the report here instead of stdout");
  app->add_flag("--poison", s.poison, "poison swept nodes");
}

void emit(const Shared& s, const std::string& text) {
  if (s.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(s.out);
  if (!f) throw std::runtime_error("cannot open " + s.out);
  f << text;
}

int run_bench(const Shared& s) {
  std::vector<BenchResult> results;
  auto structure = parse_or_throw<Structure>(s.ds, parse_structure, "--ds");
  auto variant = parse_or_throw<ListVariant>(s.variant, parse_variant, "--variant");
  auto mix = parse_or_throw<Mix>(s.mix, parse_mix, "--mix");
  std::int64_t range = s.range;
  if (range == 0) range = structure == Structure::kHash ? 2 * static_cast<std::int64_t>(s.buckets) : 10000;
  for (std::size_t threads : thread_counts(s.threads)) {
    for (const auto& name : split(s.scheme)) {
      BenchConfig c;
      c.structure = structure;
      c.variant = variant;
      c.scheme = parse_or_throw<Scheme>(name, parse_scheme, "--scheme");
      c.range = range;
      c.threads = threads;
      c.duration_secs = s.duration;
      c.repeats = s.repeats;
      c.mix = mix;
      c.pool = s.pool;
      c.seed = s.seed;
      c.buckets = s.buckets;
      c.poison = s.poison;
      results.push_back(run_benchmark(c));
      std::cerr << to_string(c.scheme) << " x" << threads << ": " << results.back().mean << " ops/s\n";
    }
  }
  attach_nr_ratios(results);
  emit(s, report(results, s.format));
  for (const auto& r : results) {
    if (!r.diagnostic.empty()) std::cerr << "warning: " << r.diagnostic << '\n';
  }
  return 0;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int print_verdict(const std::string& name, const Verdict& v) {
  std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << '\n';
  return v.pass ? 0 : 1;
}

int run_verify(const std::string& which, const Shared& s, const std::string& script, const std::string& mutation,
               std::size_t ops, double budget) {
  auto variant = parse_or_throw<ListVariant>(s.variant, parse_variant, "--variant");
  std::size_t threads = thread_counts(s.threads).front();
  int rc = 0;
  if (which == "alternation") {
    AlternationConfig c;
    c.variant = variant;
    c.scheme = parse_or_throw<Scheme>(split(s.scheme).at(0), parse_scheme, "--scheme");
    c.threads = threads;
    c.ops_per_thread = ops ? ops : 100000;
    c.keys = s.range ? s.range : 16;
    c.pool = s.pool ? s.pool : 256;
    c.seed = s.seed;
    auto r = run_alternation(c);
    rc = print_verdict("alternation", r.verdict);
    std::cout << "  injected " << r.injected << ", restarts " << r.restarts << ", phases " << r.phases << '\n';
  } else if (which == "stuck") {
    for (const auto& name : split(s.scheme)) {
      StuckConfig c;
      c.scheme = parse_or_throw<Scheme>(name, parse_scheme, "--scheme");
      c.variant = variant;
      c.threads = threads;
      c.range = s.range ? s.range : 128;
      c.pool = s.pool ? s.pool : 1000;
      c.seed = s.seed;
      c.budget_secs = budget;
      if (!script.empty()) c.script = parse_script(read_file(script));
      auto r = stuck_thread_progress(c);
      rc |= print_verdict("stuck " + name, r.verdict);
      std::cout << "  reclaimed in second half of suspension: " << r.reclaimed_late << '\n';
    }
  } else if (which == "poison") {
    auto m = parse_or_throw<Mutation>(mutation, parse_mutation, "--mutation");
    if (m == Mutation::kNone) {
      PoisonConfig c;
      c.variant = variant;
      c.threads = threads;
      c.total_ops = ops ? ops : 1000000;
      c.range = s.range ? s.range : 256;
      c.pool = s.pool ? s.pool : 2000;
      c.seed = s.seed;
      rc = print_verdict("poison", poison_audit(c).verdict);
    }
    auto sr = mutation_schedule(m, variant);
    std::ostringstream os;
    os << "mutation " << to_string(m) << ": " << sr.certified_poison << " poison, " << sr.writes_to_free_nodes
       << " writes to free nodes, " << sr.writes_outside_period << " writes outside periods, "
       << sr.stale_roots << " stale roots";
    // A seeded bug must be caught; the clean build must stay clean.
    bool ok = (m == Mutation::kNone) != sr.detected();
    rc |= print_verdict("schedule", {ok, os.str()});
  } else if (which == "swap") {
    rc = print_verdict("swap", swap_chain_check(threads, ops ? ops : 10000, s.seed));
  } else {
    throw CLI::ValidationError("verify", "expected alternation, stuck, poison or swap");
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Set benchmarks and verification suites"};
  app.require_subcommand(1);

  Shared run_opts;
  auto* run = app.add_subcommand("run", "throughput benchmark");
  add_shared(run, run_opts);

  Shared ver_opts;
  ver_opts.pool = 0;  // per-suite default
  ver_opts.threads = "4";
  std::string which, script, mutation = "none";
  std::size_t ops = 0;  // per-suite default
  double budget = 10.0;
  auto* ver = app.add_subcommand("verify", "correctness and progress suites");
  ver->add_option("suite", which, "alternation, stuck, poison or swap")
      ->required()
      ->check(CLI::IsMember({"alternation", "stuck", "poison", "swap"}));
  add_shared(ver, ver_opts);
  ver->add_option("--script", script, "suspension script, lines thread:label:resume");
  ver->add_option("--mutation", mutation, "none, skip-validate, skip-fence, skip-marker")->capture_default_str();
  ver->add_option("--ops", ops, "ops per thread (alternation, 1e5), total ops (poison, 1e6), trials (swap, 1e4)");
  ver->add_option("--budget-secs", budget, "suspension budget (stuck)")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return run_bench(run_opts);
    return run_verify(which, ver_opts, script, mutation, ops, budget);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
