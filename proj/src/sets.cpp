#include <algorithm>
#include <stdexcept>

#include "set_common.hpp"

namespace freeaccess {

std::string_view to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::kFa: return "fa";
    case Scheme::kHp: return "hp";
    case Scheme::kEbr: return "ebr";
    case Scheme::kNr: return "nr";
  }
  return "?";
}

std::string_view to_string(ListVariant v) noexcept {
  switch (v) {
    case ListVariant::kHhs: return "hhs";
    case ListVariant::kHm: return "hm";
    case ListVariant::kHarris: return "harris";
  }
  return "?";
}

std::string_view to_string(Structure s) noexcept {
  return s == Structure::kList ? "list" : "hash";
}

std::optional<Scheme> parse_scheme(std::string_view s) noexcept {
  if (s == "fa") return Scheme::kFa;
  if (s == "hp") return Scheme::kHp;
  if (s == "ebr") return Scheme::kEbr;
  if (s == "nr") return Scheme::kNr;
  return std::nullopt;
}

std::optional<ListVariant> parse_variant(std::string_view s) noexcept {
  if (s == "hhs") return ListVariant::kHhs;
  if (s == "hm") return ListVariant::kHm;
  if (s == "harris") return ListVariant::kHarris;
  return std::nullopt;
}

std::optional<Structure> parse_structure(std::string_view s) noexcept {
  if (s == "list") return Structure::kList;
  if (s == "hash") return Structure::kHash;
  return std::nullopt;
}

void check_key(std::int64_t key) {
  if (key == kHeadKey || key == kTailKey || key == static_cast<std::int64_t>(kPoison)) {
    throw std::invalid_argument("key " + std::to_string(key) + " is reserved");
  }
}

void SetConfig::validate() const {
  if ((scheme == Scheme::kHp || scheme == Scheme::kEbr) && variant != ListVariant::kHm) {
    throw std::invalid_argument("hp and ebr run only with the hm list variant");
  }
  if (structure == Structure::kHash && buckets == 0) throw std::invalid_argument("buckets must be positive");
  if (max_threads == 0) throw std::invalid_argument("max_threads must be positive");
  if (threads == 0) throw std::invalid_argument("threads must be positive");
  if (threads > max_threads) throw std::invalid_argument("threads exceeds max_threads");
  std::size_t sentinels = (structure == Structure::kHash ? buckets : 1) + 1;
  if (pool <= sentinels) {
    throw std::invalid_argument("pool of " + std::to_string(pool) + " nodes cannot hold the " +
                                std::to_string(sentinels) + " sentinels");
  }
}

std::size_t SetConfig::effective_hp_threshold() const noexcept {
  if (hp_threshold != 0) return hp_threshold;
  return std::max<std::size_t>(1, 100000 / threads);
}

std::size_t SetConfig::capacity() const noexcept {
  if (exact_pool) return pool;
  switch (scheme) {
    case Scheme::kFa: return pool;
    case Scheme::kHp: return pool + effective_hp_threshold() * (threads + 1);
    case Scheme::kEbr: return pool + 200000;
    case Scheme::kNr: return std::max(pool, nr_pool);
  }
  return pool;
}

namespace detail {

BucketSet::BucketSet(const SetConfig& config, std::size_t capacity)
    : config_(config),
      arena_(capacity, ListNode::layout()),
      heads_(config.structure == Structure::kHash ? config.buckets : 1, kNullRef),
      tid_used_(config.max_threads, false) {
  arena_.set_poison_mode(config.poison);
}

std::vector<std::int64_t> BucketSet::bucket_keys(std::size_t bucket) const {
  std::vector<std::int64_t> out;
  std::uint64_t n = clear_tag(load_word(next_word(heads_.at(bucket))));
  while (n != tail_) {
    std::uint64_t nx = load_word(next_word(n));
    if (!is_tagged(nx)) out.push_back(as_key(load_word(key_word(n))));
    n = clear_tag(nx);
  }
  return out;
}

std::vector<std::int64_t> BucketSet::keys() const {
  std::vector<std::int64_t> out;
  for (std::size_t b = 0; b < heads_.size(); ++b) {
    auto k = bucket_keys(b);
    out.insert(out.end(), k.begin(), k.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t BucketSet::count_live() const {
  std::size_t live = 1;  // tail
  for (std::uint64_t h : heads_) {
    std::uint64_t n = h;
    while (n != tail_) {
      ++live;
      n = clear_tag(load_word(next_word(n)));
    }
  }
  return live;
}

std::size_t BucketSet::acquire_tid() {
  std::lock_guard lock(tid_mu_);
  for (std::size_t i = 0; i < tid_used_.size(); ++i) {
    if (!tid_used_[i]) {
      tid_used_[i] = true;
      return i;
    }
  }
  throw std::runtime_error("too many sessions for max_threads");
}

void BucketSet::release_tid(std::size_t tid) {
  std::lock_guard lock(tid_mu_);
  tid_used_[tid] = false;
}

}  // namespace detail

std::unique_ptr<ConcurrentSet> make_set(const SetConfig& config) {
  config.validate();
  if (config.scheme == Scheme::kFa) return detail::make_fa_set(config);
  return detail::make_plain_set(config);
}

}  // namespace freeaccess
