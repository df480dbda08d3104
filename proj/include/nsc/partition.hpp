#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "nsc/core.hpp"

namespace nsc {

// Partition of {0..n-1} into disjoint nonempty blocks, stored canonically:
// blocks sorted by smallest member.
class NestStructure {
 public:
  NestStructure() = default;
  NestStructure(std::size_t n, std::vector<Menu> blocks) : n_(n), blocks_(std::move(blocks)) {
    Menu seen;
    for (Menu b : blocks_) {
      if (b.empty()) throw Error("invalid-partition", "blocks must be nonempty");
      if (!(b & seen).empty()) throw Error("invalid-partition", "blocks must be disjoint");
      seen = seen | b;
    }
    if (seen != Menu::first_n(n)) throw Error("invalid-partition", "blocks must cover the universe");
    std::sort(blocks_.begin(), blocks_.end(), [](Menu a, Menu b) { return a.lowest() < b.lowest(); });
    owner_.assign(n, 0);
    for (std::size_t k = 0; k < blocks_.size(); ++k)
      for (std::size_t i : blocks_[k]) owner_[i] = k;
  }

  // From a label per alternative (any integers; equal labels share a block).
  static NestStructure from_labels(const std::vector<std::size_t>& labels) {
    std::vector<std::pair<std::size_t, Menu>> acc;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto it = std::find_if(acc.begin(), acc.end(), [&](auto& p) { return p.first == labels[i]; });
      if (it == acc.end())
        acc.emplace_back(labels[i], Menu::single(i));
      else
        it->second = it->second.with(i);
    }
    std::vector<Menu> blocks;
    for (auto& p : acc) blocks.push_back(p.second);
    return NestStructure(labels.size(), std::move(blocks));
  }
  static NestStructure one_block(std::size_t n) { return NestStructure(n, {Menu::first_n(n)}); }
  static NestStructure singletons(std::size_t n) {
    std::vector<Menu> b;
    for (std::size_t i = 0; i < n; ++i) b.push_back(Menu::single(i));
    return NestStructure(n, std::move(b));
  }

  std::size_t universe_size() const { return n_; }
  std::size_t size() const { return blocks_.size(); }
  const std::vector<Menu>& blocks() const { return blocks_; }
  Menu block(std::size_t k) const { return blocks_.at(k); }
  std::size_t block_of(std::size_t i) const { return owner_.at(i); }
  bool same_block(std::size_t a, std::size_t b) const { return owner_.at(a) == owner_.at(b); }

  // True when every block of *this lies inside a block of coarser.
  bool refines(const NestStructure& coarser) const {
    for (Menu b : blocks_)
      if (!b.subset_of(coarser.block(coarser.block_of(b.lowest())))) return false;
    return true;
  }

  friend bool operator==(const NestStructure& a, const NestStructure& b) {
    return a.n_ == b.n_ && a.blocks_ == b.blocks_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Menu> blocks_;
  std::vector<std::size_t> owner_;
};

inline constexpr std::size_t kMaxEnumeration = 12;

// Streams all partitions of {0..n-1} in restricted-growth-string order.
class PartitionStream {
 public:
  explicit PartitionStream(std::size_t n) : n_(n), rgs_(n, 0), max_(n, 0) {
    if (n == 0) throw Error("empty-universe", "cannot enumerate partitions of an empty set");
    if (n > kMaxEnumeration) throw Error("universe-too-large", "partition enumeration is capped at 12 alternatives");
  }

  std::optional<NestStructure> next() {
    if (done_) return std::nullopt;
    if (started_ && !advance()) {
      done_ = true;
      return std::nullopt;
    }
    started_ = true;
    return current();
  }

  const std::vector<std::size_t>& labels() const { return rgs_; }

 private:
  NestStructure current() const {
    std::vector<Menu> blocks(max_.back() + 1);
    for (std::size_t i = 0; i < n_; ++i) blocks[rgs_[i]] = blocks[rgs_[i]].with(i);
    return NestStructure(n_, std::move(blocks));
  }
  // max_[i] = max(rgs_[0..i]).
  bool advance() {
    for (std::size_t i = n_; i-- > 1;) {
      if (rgs_[i] <= max_[i - 1]) {
        ++rgs_[i];
        max_[i] = std::max(max_[i - 1], rgs_[i]);
        for (std::size_t j = i + 1; j < n_; ++j) {
          rgs_[j] = 0;
          max_[j] = max_[i];
        }
        return true;
      }
    }
    return false;
  }

  std::size_t n_;
  std::vector<std::size_t> rgs_;
  std::vector<std::size_t> max_;
  bool started_ = false;
  bool done_ = false;
};

template <class F>
void for_each_partition(std::size_t n, F&& f) {
  PartitionStream s(n);
  while (auto p = s.next()) f(*p);
}

inline std::size_t count_partitions(std::size_t n) {
  std::size_t c = 0;
  for_each_partition(n, [&](const NestStructure&) { ++c; });
  return c;
}

}  // namespace nsc
