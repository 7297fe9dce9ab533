#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "freeaccess/node_pool.hpp"
#include "freeaccess/runtime.hpp"

namespace freeaccess {

enum class Scheme { kFa, kHp, kEbr, kNr };
enum class ListVariant { kHhs, kHm, kHarris };
enum class Structure { kList, kHash };

std::string_view to_string(Scheme s) noexcept;
std::string_view to_string(ListVariant v) noexcept;
std::string_view to_string(Structure s) noexcept;
std::optional<Scheme> parse_scheme(std::string_view s) noexcept;
std::optional<ListVariant> parse_variant(std::string_view s) noexcept;
std::optional<Structure> parse_structure(std::string_view s) noexcept;

inline constexpr std::int64_t kHeadKey = std::numeric_limits<std::int64_t>::min();
inline constexpr std::int64_t kTailKey = std::numeric_limits<std::int64_t>::max();

/// List node: word 0 key, word 1 successor link (low bit = deletion tag).
struct ListNode {
  static constexpr std::size_t kKey = 0;
  static constexpr std::size_t kNext = 1;
  static NodeLayout layout() { return NodeLayout{16, {8}}; }
};

struct SetConfig {
  Structure structure = Structure::kList;
  ListVariant variant = ListVariant::kHm;
  Scheme scheme = Scheme::kFa;
  std::size_t buckets = 10000;
  std::size_t pool = 50000;
  std::size_t max_threads = 64;
  /// Expected worker count; sets the hazard-pointer retire threshold.
  std::size_t threads = 1;
  /// Retire threshold override for HP (0: 100000 / threads).
  std::size_t hp_threshold = 0;
  /// Use pool as the capacity for every scheme. Otherwise the retire-based
  /// schemes get headroom for their retired lists and NR gets nr_pool.
  bool exact_pool = false;
  std::size_t nr_pool = std::size_t{1} << 23;
  bool poison = false;
  bool audit = false;
  Mutation mutation = Mutation::kNone;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  std::size_t effective_hp_threshold() const noexcept;
  /// Arena capacity actually used for this scheme.
  std::size_t capacity() const noexcept;
};

struct MemoryReport {
  std::size_t capacity = 0;
  std::size_t free = 0;
  std::size_t allocated = 0;
  /// Nodes reachable from the bucket heads, sentinels included.
  std::size_t live = 0;
  /// Retired but not yet freed (HP/EBR).
  std::size_t pending = 0;
};

struct SetStats {
  /// FA: completed phases; HP: scans; EBR: epoch advances.
  std::uint64_t reclaim_events = 0;
  std::uint64_t reclaimed = 0;
  std::uint64_t restarts = 0;
  std::uint64_t certified_poison = 0;
  std::uint64_t writes_outside_period = 0;
  std::uint64_t writes_to_free_nodes = 0;
};

/// One thread's handle on a set. Not shareable between threads.
class SetSession {
 public:
  virtual ~SetSession() = default;
  virtual bool contains(std::int64_t key) = 0;
  virtual bool insert(std::int64_t key) = 0;
  virtual bool remove(std::int64_t key) = 0;
  virtual void set_hook(ExecutionHook* hook) = 0;
  /// The Free Access context, when the set runs under that scheme.
  virtual ExecutionContext* context() noexcept { return nullptr; }
};

class ConcurrentSet {
 public:
  virtual ~ConcurrentSet() = default;
  virtual const SetConfig& config() const noexcept = 0;
  virtual std::unique_ptr<SetSession> open_session() = 0;
  /// Sorted untagged keys. Quiescent only.
  virtual std::vector<std::int64_t> keys() const = 0;
  /// Under FA first runs one full phase so garbage is swept. Quiescent only.
  virtual MemoryReport memory_report() = 0;
  virtual SetStats stats() const = 0;
  virtual Arena& arena() noexcept = 0;
  virtual Runtime* runtime() noexcept { return nullptr; }
  /// Bucket index for key.
  std::size_t bucket_of(std::int64_t key) const noexcept {
    const auto& c = config();
    if (c.structure == Structure::kList) return 0;
    auto b = static_cast<std::int64_t>(c.buckets);
    return static_cast<std::size_t>(((key % b) + b) % b);
  }
  /// Keys of one bucket in list order. Quiescent only.
  virtual std::vector<std::int64_t> bucket_keys(std::size_t bucket) const = 0;
};

/// Throws std::invalid_argument if key is a sentinel or the poison pattern.
void check_key(std::int64_t key);

std::unique_ptr<ConcurrentSet> make_set(const SetConfig& config);

}  // namespace freeaccess
