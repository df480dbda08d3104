#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <unordered_map>
#include <vector>

#include "nsc/core.hpp"

namespace nsc {

inline constexpr double kRowSumTolerance = 1e-12;

// Stochastic choice function: each stored menu maps to a strictly positive
// distribution over its members, listed in universe order.
class ChoiceTable {
 public:
  ChoiceTable() = default;
  explicit ChoiceTable(Universe universe) : universe_(std::move(universe)) {}

  const Universe& universe() const { return universe_; }

  void set(Menu menu, std::vector<double> probs) {
    if (menu.empty() || !menu.subset_of(universe_.all()))
      throw Error("invalid-menu", "menu must be a nonempty subset of the universe");
    if (probs.size() != menu.size())
      throw Error("invalid-row", "row for " + universe_.label(menu) + " has wrong length");
    double sum = 0.0;
    for (double p : probs) {
      if (!(p > 0.0) || !std::isfinite(p))
        throw Error("table-not-positive", "nonpositive probability in menu " + universe_.label(menu));
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance)
      throw Error("row-not-normalized", "probabilities of " + universe_.label(menu) + " do not sum to 1");
    rows_[menu.bits()] = std::move(probs);
  }

  bool has(Menu menu) const { return rows_.count(menu.bits()) != 0; }

  std::span<const double> row(Menu menu) const {
    auto it = rows_.find(menu.bits());
    if (it == rows_.end()) throw Error("missing-menu", "no row for menu " + universe_.label(menu));
    return it->second;
  }

  // p(a, A); zero when a is not in A.
  double prob(std::size_t a, Menu menu) const {
    if (!menu.contains(a)) return 0.0;
    auto r = row(menu);
    return r[Menu(menu.bits() & ((std::uint64_t{1} << a) - 1)).size()];
  }

  // p(B, A) = sum over b in B of p(b, A).
  double prob(Menu sub, Menu menu) const {
    auto r = row(menu);
    double s = 0.0;
    std::size_t k = 0;
    for (std::size_t i : menu) {
      if (sub.contains(i)) s += r[k];
      ++k;
    }
    return s;
  }

  std::size_t menu_count() const { return rows_.size(); }

  bool complete() const {
    const std::size_t n = universe_.size();
    return n < 64 && rows_.size() == (std::size_t{1} << n) - 1;
  }

  void require_complete() const {
    if (!complete()) throw Error("incomplete-table", "operation requires a complete choice table");
  }

  // Stored menus in increasing bitmask order.
  std::vector<Menu> menus() const {
    std::vector<Menu> out;
    out.reserve(rows_.size());
    for (const auto& kv : rows_) out.emplace_back(kv.first);
    std::sort(out.begin(), out.end());
    return out;
  }

  double min_prob() const {
    double m = 1.0;
    for (const auto& kv : rows_)
      for (double p : kv.second) m = std::min(m, p);
    return m;
  }

 private:
  Universe universe_;
  std::unordered_map<std::uint64_t, std::vector<double>> rows_;
};

// Largest |p - q| over menus stored in both tables.
inline double max_abs_difference(const ChoiceTable& a, const ChoiceTable& b) {
  double worst = 0.0;
  for (Menu m : a.menus()) {
    auto ra = a.row(m);
    auto rb = b.row(m);
    for (std::size_t k = 0; k < ra.size(); ++k) worst = std::max(worst, std::abs(ra[k] - rb[k]));
  }
  return worst;
}

}  // namespace nsc
