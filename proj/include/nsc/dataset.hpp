#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsc/choice_table.hpp"

namespace nsc {

struct MenuCounts {
  std::string id;
  Menu menu;
  std::vector<double> counts;  // aligned with menu members in universe order
  double total = 0.0;
};

// Observed choices per menu. Counts are usually integers; fractional weights
// are accepted so exact or perturbed tables can be scored directly.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Universe universe) : universe_(std::move(universe)) {}

  const Universe& universe() const { return universe_; }
  const std::vector<MenuCounts>& menus() const { return menus_; }
  std::size_t size() const { return menus_.size(); }

  // Adds a menu; a repeated member set is merged into the existing entry.
  void add(std::string id, Menu menu, std::vector<double> counts) {
    if (menu.empty() || !menu.subset_of(universe_.all()))
      throw Error("invalid-menu", "menu must be a nonempty subset of the universe");
    if (counts.size() != menu.size()) throw Error("invalid-row", "counts must align with menu members");
    double total = 0.0;
    for (double c : counts) {
      if (!(c >= 0.0) || !std::isfinite(c)) throw Error("invalid-count", "counts must be finite and nonnegative");
      total += c;
    }
    if (!(total > 0.0)) throw Error("invalid-count", "menu " + id + " has no observations");
    auto it = index_.find(menu.bits());
    if (it != index_.end()) {
      auto& e = menus_[it->second];
      for (std::size_t k = 0; k < counts.size(); ++k) e.counts[k] += counts[k];
      e.total += total;
      return;
    }
    index_[menu.bits()] = menus_.size();
    menus_.push_back({std::move(id), menu, std::move(counts), total});
  }

  // Each row of the table becomes a menu whose counts are weight * p.
  static Dataset from_table(const ChoiceTable& t, double weight = 1.0) {
    Dataset d(t.universe());
    std::size_t k = 0;
    for (Menu m : t.menus()) {
      auto r = t.row(m);
      std::vector<double> c(r.begin(), r.end());
      for (double& x : c) x *= weight;
      d.add("m" + std::to_string(++k), m, std::move(c));
    }
    return d;
  }

  // Log empirical frequencies per menu, aligned with members. Zero counts are
  // an error unless smoothing adds half a count to every member of every menu.
  std::vector<std::vector<double>> log_frequencies(bool smoothing) const {
    std::vector<std::vector<double>> out;
    out.reserve(menus_.size());
    for (const auto& e : menus_) {
      const double add = smoothing ? 0.5 : 0.0;
      const double total = e.total + add * static_cast<double>(e.counts.size());
      std::vector<double> row;
      std::size_t k = 0;
      for (std::size_t a : e.menu) {
        const double c = e.counts[k++] + add;
        if (!(c > 0.0) && e.menu.size() > 1)
          throw Error("zero-frequency",
                      "alternative " + universe_.id(a) + " has zero frequency in menu " + universe_.label(e.menu),
                      nlohmann::json{{"menu", e.id}, {"alternative", universe_.id(a)}}.dump());
        row.push_back(c > 0.0 ? std::log(c / total) : 0.0);
      }
      out.push_back(std::move(row));
    }
    return out;
  }

 private:
  Universe universe_;
  std::vector<MenuCounts> menus_;
  std::map<std::uint64_t, std::size_t> index_;
};

}  // namespace nsc
