// Alternatives, menus and the library-wide error type.
#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace nsc {

// Domain error. `code` is a stable kebab-case tag (e.g. "isa-violated");
// `detail` optionally carries a JSON-encoded witness.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(std::move(code)), detail_(std::move(detail)) {}
  const std::string& code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string code_;
  std::string detail_;
};

inline constexpr std::size_t kMaxAlternatives = 64;

// A set of alternatives encoded as a bitmask over the universe ordering.
// Empty values arise as intersections; operations that need a choice menu
// check non-emptiness themselves.
class Menu {
 public:
  constexpr Menu() = default;
  constexpr explicit Menu(std::uint64_t bits) : bits_(bits) {}
  static constexpr Menu single(std::size_t i) { return Menu(std::uint64_t{1} << i); }
  static constexpr Menu first_n(std::size_t n) {
    return Menu(n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  constexpr bool contains(std::size_t i) const { return (bits_ >> i) & 1u; }
  constexpr bool subset_of(Menu o) const { return (bits_ & ~o.bits_) == 0; }
  constexpr std::size_t lowest() const { return static_cast<std::size_t>(std::countr_zero(bits_)); }
  constexpr Menu with(std::size_t i) const { return Menu(bits_ | (std::uint64_t{1} << i)); }
  constexpr Menu without(std::size_t i) const { return Menu(bits_ & ~(std::uint64_t{1} << i)); }

  friend constexpr Menu operator|(Menu a, Menu b) { return Menu(a.bits_ | b.bits_); }
  friend constexpr Menu operator&(Menu a, Menu b) { return Menu(a.bits_ & b.bits_); }
  friend constexpr Menu operator-(Menu a, Menu b) { return Menu(a.bits_ & ~b.bits_); }
  friend constexpr bool operator==(Menu a, Menu b) = default;
  friend constexpr auto operator<=>(Menu a, Menu b) = default;

  // Iterates member indices in increasing order.
  class iterator {
   public:
    using value_type = std::size_t;
    using difference_type = std::ptrdiff_t;
    constexpr iterator() = default;
    constexpr explicit iterator(std::uint64_t rest) : rest_(rest) {}
    constexpr std::size_t operator*() const { return static_cast<std::size_t>(std::countr_zero(rest_)); }
    constexpr iterator& operator++() {
      rest_ &= rest_ - 1;
      return *this;
    }
    constexpr iterator operator++(int) {
      auto t = *this;
      ++*this;
      return t;
    }
    friend constexpr bool operator==(iterator a, iterator b) = default;

   private:
    std::uint64_t rest_ = 0;
  };
  constexpr iterator begin() const { return iterator(bits_); }
  constexpr iterator end() const { return iterator(0); }

 private:
  std::uint64_t bits_ = 0;
};

// Calls f(sub) for every nonempty subset of m, in increasing bit order.
template <class F>
void for_each_subset(Menu m, F&& f) {
  const std::uint64_t full = m.bits();
  for (std::uint64_t s = (~full + 1) & full; s != 0; s = (s - full) & full) f(Menu(s));
}

// Position of `sub` inside `block` when block members are relabeled 0..|block|-1.
inline std::uint64_t compress(Menu sub, Menu block) {
  std::uint64_t out = 0;
  std::size_t k = 0;
  for (std::size_t i : block) {
    if (sub.contains(i)) out |= std::uint64_t{1} << k;
    ++k;
  }
  return out;
}

// Inverse of compress.
inline Menu expand(std::uint64_t local, Menu block) {
  std::uint64_t out = 0;
  std::size_t k = 0;
  for (std::size_t i : block) {
    if ((local >> k) & 1u) out |= std::uint64_t{1} << i;
    ++k;
  }
  return Menu(out);
}

class Universe {
 public:
  Universe() = default;
  explicit Universe(std::vector<std::string> ids) : ids_(std::move(ids)) {
    if (ids_.empty()) throw Error("empty-universe", "universe must contain at least one alternative");
    if (ids_.size() > kMaxAlternatives)
      throw Error("universe-too-large", "at most 64 alternatives are supported");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!index_.emplace(ids_[i], i).second)
        throw Error("duplicate-alternative", "duplicate alternative id '" + ids_[i] + "'");
    }
  }
  // Universe with ids "x1".."xn".
  static Universe indexed(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 1; i <= n; ++i) ids.push_back("x" + std::to_string(i));
    return Universe(std::move(ids));
  }

  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::size_t i) const { return ids_.at(i); }
  const std::vector<std::string>& ids() const { return ids_; }
  Menu all() const { return Menu::first_n(ids_.size()); }

  std::size_t index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw Error("unknown-alternative", "unknown alternative '" + std::string(id) + "'");
    return it->second;
  }
  Menu menu(const std::vector<std::string>& ids) const {
    Menu m;
    for (const auto& s : ids) m = m.with(index_of(s));
    return m;
  }
  std::vector<std::string> names(Menu m) const {
    std::vector<std::string> out;
    for (std::size_t i : m) out.push_back(ids_.at(i));
    return out;
  }
  std::string label(Menu m) const {
    std::string s = "{";
    bool first = true;
    for (std::size_t i : m) {
      if (!first) s += ",";
      s += ids_.at(i);
      first = false;
    }
    return s + "}";
  }

  friend bool operator==(const Universe& a, const Universe& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace nsc
