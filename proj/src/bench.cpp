#include "freeaccess/bench.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

namespace freeaccess {

std::optional<Mix> parse_mix(std::string_view text) noexcept {
  unsigned parts[3];
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    std::size_t end = text.find(':', pos);
    if ((i < 2) != (end != std::string_view::npos)) return std::nullopt;
    std::string_view field = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), parts[i]);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) return std::nullopt;
    pos = end + 1;
  }
  if (parts[0] + parts[1] + parts[2] != 100) return std::nullopt;
  return Mix{parts[0], parts[1], parts[2]};
}

std::string to_string(const Mix& mix) {
  return std::to_string(mix.contains) + ":" + std::to_string(mix.insert) + ":" +
         std::to_string(mix.remove);
}

void BenchConfig::validate() const {
  if (range < 1) throw std::invalid_argument("range must be positive");
  if (threads == 0) throw std::invalid_argument("threads must be positive");
  if (!(duration_secs > 0)) throw std::invalid_argument("duration must be positive");
  if (repeats == 0) throw std::invalid_argument("repeats must be positive");
  if (mix.contains + mix.insert + mix.remove != 100) throw std::invalid_argument("mix must sum to 100");
  set_config().validate();
}

SetConfig BenchConfig::set_config() const {
  SetConfig c;
  c.structure = structure;
  c.variant = variant;
  c.scheme = scheme;
  c.buckets = buckets;
  c.pool = pool;
  c.threads = threads;
  c.max_threads = std::max<std::size_t>(64, threads + 2);
  c.poison = poison;
  return c;
}

OpGenerator::OpGenerator(std::uint64_t seed, std::uint64_t repeat, std::uint64_t thread,
                         std::int64_t range, Mix mix)
    : key_(0, range - 1), mix_(mix) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(repeat), static_cast<std::uint32_t>(thread)};
  rng_.seed(seq);
}

std::pair<OpType, std::int64_t> OpGenerator::next() {
  unsigned p = pct_(rng_);
  std::int64_t k = key_(rng_);
  if (p < mix_.contains) return {OpType::kContains, k};
  if (p < mix_.contains + mix_.insert) return {OpType::kInsert, k};
  return {OpType::kRemove, k};
}

std::vector<std::int64_t> prefill_keys(std::int64_t range, std::uint64_t seed) {
  std::vector<std::int64_t> keys(static_cast<std::size_t>(range));
  std::iota(keys.begin(), keys.end(), 0);
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  std::shuffle(keys.begin(), keys.end(), rng);
  keys.resize(keys.size() / 2);
  return keys;
}

double ci95_half_width(const std::vector<double>& samples) {
  std::size_t n = samples.size();
  if (n < 2) return 0.0;
  double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / (n - 1));
  boost::math::students_t dist(static_cast<double>(n - 1));
  double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  return t * sd / std::sqrt(static_cast<double>(n));
}

namespace {

struct RepeatOutcome {
  double ops_per_sec = 0;
  std::string diagnostic;
  std::size_t prefilled = 0;
};

RepeatOutcome run_repeat(const BenchConfig& cfg, std::size_t repeat) {
  RepeatOutcome out;
  auto set = make_set(cfg.set_config());
  {
    auto s = set->open_session();
    for (std::int64_t k : prefill_keys(cfg.range, cfg.seed + repeat)) out.prefilled += s->insert(k);
  }

  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> total{0};
  std::string diag;
  std::atomic<bool> failed{false};
  std::barrier start(static_cast<std::ptrdiff_t>(cfg.threads + 1));
  std::vector<std::thread> workers;
  workers.reserve(cfg.threads);
  for (std::size_t t = 0; t < cfg.threads; ++t) {
    workers.emplace_back([&, t] {
      auto session = set->open_session();
      OpGenerator gen(cfg.seed, repeat, t, cfg.range, cfg.mix);
      std::uint64_t done = 0;
      start.arrive_and_wait();
      try {
        while (!stop.load(std::memory_order_relaxed)) {
          auto [op, key] = gen.next();
          switch (op) {
            case OpType::kContains: session->contains(key); break;
            case OpType::kInsert: session->insert(key); break;
            case OpType::kRemove: session->remove(key); break;
          }
          ++done;
        }
      } catch (const ArenaExhausted& e) {
        if (!failed.exchange(true)) diag = e.what();
        stop.store(true);
      }
      total.fetch_add(done);
    });
  }
  start.arrive_and_wait();
  auto t0 = std::chrono::steady_clock::now();
  auto deadline = t0 + std::chrono::duration<double>(cfg.duration_secs);
  while (!stop.load() && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  stop.store(true);
  auto t1 = std::chrono::steady_clock::now();
  for (auto& w : workers) w.join();
  double secs = std::chrono::duration<double>(t1 - t0).count();
  out.ops_per_sec = static_cast<double>(total.load()) / secs;
  out.diagnostic = diag;
  return out;
}

}  // namespace

BenchResult run_benchmark(const BenchConfig& config) {
  config.validate();
  BenchResult r;
  r.config = config;
  for (std::size_t i = 0; i < config.repeats; ++i) {
    RepeatOutcome o = run_repeat(config, i);
    r.throughput.push_back(o.ops_per_sec);
    r.prefilled = o.prefilled;
    if (!o.diagnostic.empty() && r.diagnostic.empty()) {
      r.diagnostic = "repeat " + std::to_string(i) + ": " + o.diagnostic;
    }
  }
  r.mean = std::accumulate(r.throughput.begin(), r.throughput.end(), 0.0) / r.throughput.size();
  r.ci95 = ci95_half_width(r.throughput);
  return r;
}

void attach_nr_ratios(std::vector<BenchResult>& results) {
  for (auto& r : results) {
    r.ratio_nr.reset();
    for (const auto& nr : results) {
      const auto& a = r.config;
      const auto& b = nr.config;
      if (b.scheme != Scheme::kNr || b.structure != a.structure || b.range != a.range ||
          b.threads != a.threads || !(b.mix == a.mix) || b.seed != a.seed || nr.mean <= 0) {
        continue;
      }
      r.ratio_nr = r.mean / nr.mean;
      break;
    }
  }
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::vector<std::string> row(const BenchResult& r) {
  const auto& c = r.config;
  return {std::string(to_string(c.structure)),
          std::string(to_string(c.variant)),
          std::string(to_string(c.scheme)),
          std::to_string(c.range),
          std::to_string(c.threads),
          to_string(c.mix),
          std::to_string(c.repeats),
          fixed(r.mean, 1),
          fixed(r.ci95, 1),
          r.ratio_nr ? fixed(*r.ratio_nr, 4) : std::string()};
}

}  // namespace

std::string report(const std::vector<BenchResult>& results, std::string_view format) {
  std::ostringstream os;
  if (format == "csv") {
    os << kCsvHeader << '\n';
    for (const auto& r : results) {
      auto cells = row(r);
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
      os << '\n';
    }
  } else if (format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results) {
      const auto& c = r.config;
      nlohmann::json j;
      j["ds"] = to_string(c.structure);
      j["variant"] = to_string(c.variant);
      j["scheme"] = to_string(c.scheme);
      j["range"] = c.range;
      j["threads"] = c.threads;
      j["mix"] = to_string(c.mix);
      j["repeats"] = c.repeats;
      j["mean_ops"] = r.mean;
      j["ci95"] = r.ci95;
      j["ratio_nr"] = r.ratio_nr ? nlohmann::json(*r.ratio_nr) : nlohmann::json(nullptr);
      j["duration_secs"] = c.duration_secs;
      j["pool"] = c.pool;
      j["seed"] = c.seed;
      j["throughput"] = r.throughput;
      j["prefilled"] = r.prefilled;
      if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
      arr.push_back(std::move(j));
    }
    os << arr.dump(2) << '\n';
  } else if (format == "table") {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header;
    std::string_view h = kCsvHeader;
    while (!h.empty()) {
      auto comma = h.find(',');
      header.emplace_back(h.substr(0, comma));
      h = comma == std::string_view::npos ? std::string_view() : h.substr(comma + 1);
    }
    rows.push_back(header);
    for (const auto& r : results) rows.push_back(row(r));
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& cells : rows) {
      for (std::size_t i = 0; i < cells.size(); ++i) width[i] = std::max(width[i], cells[i].size());
    }
    for (const auto& cells : rows) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        os << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << cells[i];
      }
      os << '\n';
    }
    for (const auto& r : results) {
      if (!r.diagnostic.empty()) {
        os << "! " << to_string(r.config.scheme) << ": " << r.diagnostic << '\n';
      }
    }
  } else {
    throw std::invalid_argument("unknown report format '" + std::string(format) + "'");
  }
  return os.str();
}

}  // namespace freeaccess
