#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "freeaccess/sets.hpp"

namespace freeaccess {

struct Mix {
  unsigned contains = 50;
  unsigned insert = 25;
  unsigned remove = 25;
  friend bool operator==(const Mix&, const Mix&) = default;
};

/// Parses "c:i:r"; percentages must sum to 100.
std::optional<Mix> parse_mix(std::string_view text) noexcept;
std::string to_string(const Mix& mix);

enum class OpType { kContains, kInsert, kRemove };

struct BenchConfig {
  Structure structure = Structure::kList;
  ListVariant variant = ListVariant::kHm;
  Scheme scheme = Scheme::kFa;
  std::int64_t range = 10000;
  std::size_t threads = 1;
  double duration_secs = 1.0;
  std::size_t repeats = 10;
  Mix mix;
  std::size_t pool = 50000;
  std::uint64_t seed = 1;
  std::size_t buckets = 10000;
  bool poison = false;

  /// Throws std::invalid_argument.
  void validate() const;
  SetConfig set_config() const;
};

/// Per-thread operation stream. Same (seed, repeat, thread) gives the same
/// sequence regardless of timing.
class OpGenerator {
 public:
  OpGenerator(std::uint64_t seed, std::uint64_t repeat, std::uint64_t thread, std::int64_t range,
              Mix mix);
  std::pair<OpType, std::int64_t> next();

 private:
  std::mt19937_64 rng_;
  std::uniform_int_distribution<std::int64_t> key_;
  std::uniform_int_distribution<unsigned> pct_{0, 99};
  Mix mix_;
};

/// Keys inserted before the timed run: a seeded half of [0, range).
std::vector<std::int64_t> prefill_keys(std::int64_t range, std::uint64_t seed);

struct BenchResult {
  BenchConfig config;
  std::vector<double> throughput;  // ops per second, one per repeat
  double mean = 0;
  double ci95 = 0;
  std::optional<double> ratio_nr;
  std::size_t prefilled = 0;
  std::string diagnostic;  // non-empty when a repeat hit exhaustion
};

/// Half-width of the 95% Student-t interval of the mean (0 for < 2 samples).
double ci95_half_width(const std::vector<double>& samples);

BenchResult run_benchmark(const BenchConfig& config);

/// Fills ratio_nr for every result with an NR result of the same structure,
/// range, threads, mix and seed.
void attach_nr_ratios(std::vector<BenchResult>& results);

inline constexpr std::string_view kCsvHeader =
    "ds,variant,scheme,range,threads,mix,repeats,mean_ops,ci95,ratio_nr";

/// format: csv, json or table. Throws std::invalid_argument otherwise.
std::string report(const std::vector<BenchResult>& results, std::string_view format);

}  // namespace freeaccess
