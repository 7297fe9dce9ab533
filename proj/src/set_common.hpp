#pragma once

#include <mutex>
#include <vector>

#include "freeaccess/sets.hpp"

namespace freeaccess::detail {

inline std::uint64_t& key_word(std::uint64_t node) noexcept { return NodeRef(node).word(ListNode::kKey); }
inline std::uint64_t& next_word(std::uint64_t node) noexcept { return NodeRef(node).word(ListNode::kNext); }
inline std::int64_t as_key(std::uint64_t w) noexcept { return static_cast<std::int64_t>(w); }
inline std::uint64_t as_word(std::int64_t k) noexcept { return static_cast<std::uint64_t>(k); }

/// Arena, sentinels and bucket heads shared by every scheme.
class BucketSet : public ConcurrentSet {
 public:
  explicit BucketSet(const SetConfig& config, std::size_t capacity);

  const SetConfig& config() const noexcept override { return config_; }
  Arena& arena() noexcept override { return arena_; }
  std::vector<std::int64_t> keys() const override;
  std::vector<std::int64_t> bucket_keys(std::size_t bucket) const override;

  std::uint64_t head_for(std::int64_t key) const noexcept { return heads_[bucket_of(key)]; }
  std::uint64_t tail() const noexcept { return tail_; }

 protected:
  /// Allocates and links the sentinels; alloc must return initialized-free nodes.
  template <class Alloc>
  void build(Alloc&& alloc) {
    tail_ = alloc();
    store_word(key_word(tail_), as_word(kTailKey));
    store_word(next_word(tail_), kNullRef);
    for (auto& h : heads_) {
      std::uint64_t n = alloc();
      store_word(key_word(n), as_word(kHeadKey));
      store_word(next_word(n), tail_);
      store_word(h, n, std::memory_order_seq_cst);
    }
  }
  /// Nodes reachable from the heads, sentinels included.
  std::size_t count_live() const;

  /// Session ids for the per-thread baseline state.
  std::size_t acquire_tid();
  void release_tid(std::size_t tid);

  SetConfig config_;
  Arena arena_;
  std::vector<std::uint64_t> heads_;
  std::uint64_t tail_ = kNullRef;

 private:
  std::mutex tid_mu_;
  std::vector<bool> tid_used_;
};

std::unique_ptr<ConcurrentSet> make_fa_set(const SetConfig& config);
std::unique_ptr<ConcurrentSet> make_plain_set(const SetConfig& config);

}  // namespace freeaccess::detail
