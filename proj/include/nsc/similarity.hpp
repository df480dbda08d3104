// Revealed similarity relations, the pairwise IIA-violation distance and the
// threshold-based candidate partitions.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "nsc/choice_table.hpp"
#include "nsc/dataset.hpp"
#include "nsc/models.hpp"
#include "nsc/partition.hpp"

namespace nsc {

inline constexpr double kDefaultTolerance = 1e-9;

// Symmetric relation on the universe, stored as one neighbour mask per alternative.
class SimilarityRelation {
 public:
  SimilarityRelation() = default;
  SimilarityRelation(Universe universe, bool reflexive) : universe_(std::move(universe)) {
    rows_.assign(universe_.size(), Menu());
    if (reflexive)
      for (std::size_t i = 0; i < rows_.size(); ++i) rows_[i] = Menu::single(i);
  }

  const Universe& universe() const { return universe_; }
  std::size_t size() const { return rows_.size(); }
  bool related(std::size_t a, std::size_t b) const { return rows_.at(a).contains(b); }
  Menu neighbors(std::size_t a) const { return rows_.at(a); }
  void relate(std::size_t a, std::size_t b) {
    rows_.at(a) = rows_[a].with(b);
    rows_.at(b) = rows_[b].with(a);
  }

  // First (a, b, c) in index order with a~b, b~c and not a~c.
  std::optional<std::array<std::size_t, 3>> intransitive_triple() const {
    const std::size_t n = rows_.size();
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t a : rows_[b])
        for (std::size_t c : rows_[b])
          if (a != c && !related(a, c)) return std::array<std::size_t, 3>{a, b, c};
    return std::nullopt;
  }
  bool transitive() const { return !intransitive_triple().has_value(); }

  // Quotient partition; requires a reflexive transitive relation.
  NestStructure classes() const {
    if (!transitive()) throw Error("not-transitive", "relation is not transitive");
    std::vector<Menu> blocks;
    Menu seen;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (seen.contains(i)) continue;
      Menu cls = rows_[i].with(i);
      blocks.push_back(cls);
      seen = seen | cls;
    }
    return NestStructure(rows_.size(), std::move(blocks));
  }

  friend SimilarityRelation operator|(const SimilarityRelation& x, const SimilarityRelation& y) {
    SimilarityRelation r = x;
    for (std::size_t i = 0; i < r.rows_.size(); ++i) r.rows_[i] = r.rows_[i] | y.rows_.at(i);
    return r;
  }
  friend bool operator==(const SimilarityRelation& x, const SimilarityRelation& y) { return x.rows_ == y.rows_; }

 private:
  Universe universe_;
  std::vector<Menu> rows_;
};

namespace detail {

inline double log_ratio(const ChoiceTable& t, std::size_t a, std::size_t b, Menu menu) {
  auto r = t.row(menu);
  return std::log(r[static_cast<std::size_t>(position_in(a, menu))]) -
         std::log(r[static_cast<std::size_t>(position_in(b, menu))]);
}

// Calls f(A) for every menu A with must ⊆ A ⊆ must ∪ free.
template <class F>
void for_each_superset(Menu must, Menu free, F&& f) {
  f(must);
  for_each_subset(free - must, [&](Menu s) { f(must | s); });
}

}  // namespace detail

// a ~ b iff the a/b ratio equals its pairwise value in every menu containing both.
inline SimilarityRelation revealed_similarity(const ChoiceTable& t, double tol = kDefaultTolerance) {
  t.require_complete();
  const Universe& U = t.universe();
  SimilarityRelation rel(U, true);
  for (std::size_t a = 0; a < U.size(); ++a)
    for (std::size_t b = a + 1; b < U.size(); ++b) {
      const Menu pair = Menu::single(a).with(b);
      const double ref = detail::log_ratio(t, a, b, pair);
      bool ok = true;
      detail::for_each_superset(pair, U.all(), [&](Menu A) {
        if (ok && std::abs(detail::log_ratio(t, a, b, A) - ref) > tol) ok = false;
      });
      if (ok) rel.relate(a, b);
    }
  return rel;
}

struct ApproxSimilarity {
  SimilarityRelation bowtie;    // approximately similar, never overlapping with ~
  SimilarityRelation combined;  // ~ union bowtie
  std::vector<std::pair<std::size_t, std::size_t>> vacuous;  // pairs related with no qualifying third alternative
};

// a bowtie b iff a is not ~ b and the a/b ratio is unchanged by adding any x
// dissimilar to both.
inline ApproxSimilarity approx_revealed_similarity(const ChoiceTable& t, const SimilarityRelation& sim,
                                                   double tol = kDefaultTolerance) {
  t.require_complete();
  const Universe& U = t.universe();
  ApproxSimilarity out{SimilarityRelation(U, false), sim, {}};
  for (std::size_t a = 0; a < U.size(); ++a)
    for (std::size_t b = a + 1; b < U.size(); ++b) {
      if (sim.related(a, b)) continue;
      const Menu pair = Menu::single(a).with(b);
      const Menu outsiders = U.all() - (sim.neighbors(a) | sim.neighbors(b));
      bool ok = true;
      detail::for_each_superset(pair, U.all(), [&](Menu A) {
        if (!ok) return;
        const double base = detail::log_ratio(t, a, b, A);
        for (std::size_t x : outsiders - A)
          if (std::abs(detail::log_ratio(t, a, b, A.with(x)) - base) > tol) {
            ok = false;
            return;
          }
      });
      if (ok) {
        out.bowtie.relate(a, b);
        out.combined.relate(a, b);
        if (outsiders.empty()) out.vacuous.emplace_back(a, b);
      }
    }
  return out;
}

struct DistanceMatrix {
  Universe universe;
  std::vector<std::vector<double>> d;
  std::vector<std::vector<double>> pair_counts;  // number of (A, B) menu pairs behind each entry
};

namespace detail {

// Sum over ordered pairs (i, j) of (x_i - x_j)^2, computed as 2m * sum (x - mean)^2.
inline double pairwise_square_sum(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return 2.0 * static_cast<double>(x.size()) * ss;
}

struct PairStats {
  std::vector<std::vector<double>> sum;    // numerator per unordered pair
  std::vector<std::vector<double>> count;  // m^2 per pair, m = menus containing both
};

inline PairStats pair_stats(const Dataset& data, const std::vector<std::vector<double>>& logf) {
  const std::size_t n = data.universe().size();
  PairStats s{std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)),
              std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0))};
  std::vector<double> xs;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      xs.clear();
      for (std::size_t k = 0; k < data.size(); ++k) {
        const Menu m = data.menus()[k].menu;
        if (!m.contains(a) || !m.contains(b)) continue;
        xs.push_back(logf[k][static_cast<std::size_t>(position_in(a, m))] -
                     logf[k][static_cast<std::size_t>(position_in(b, m))]);
      }
      const double m = static_cast<double>(xs.size());
      s.sum[a][b] = s.sum[b][a] = pairwise_square_sum(xs);
      s.count[a][b] = s.count[b][a] = m * m;
    }
  return s;
}

}  // namespace detail

// d(a, b): mean squared difference of log(p(a,A)/p(b,A)) over ordered menu
// pairs (A, B) containing both, A = B included. Zero when no menu has both.
inline DistanceMatrix distance_matrix(const Dataset& data, bool smoothing = false) {
  const auto logf = data.log_frequencies(smoothing);
  auto s = detail::pair_stats(data, logf);
  const std::size_t n = data.universe().size();
  DistanceMatrix out{data.universe(), std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)), s.count};
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b && s.count[a][b] > 0.0) out.d[a][b] = s.sum[a][b] / s.count[a][b];
  return out;
}

struct EpsilonPartition {
  std::optional<NestStructure> partition;
  std::optional<std::array<std::size_t, 3>> violation;  // a~b, b~c, a!~c
};

// Quotient of x ~ y iff d(x, y) < eps, when that relation is transitive.
inline EpsilonPartition epsilon_partition(const DistanceMatrix& d, double eps) {
  SimilarityRelation rel(d.universe, true);
  for (std::size_t a = 0; a < d.d.size(); ++a)
    for (std::size_t b = a + 1; b < d.d.size(); ++b)
      if (d.d[a][b] < eps) rel.relate(a, b);
  if (auto t = rel.intransitive_triple()) return {std::nullopt, t};
  return {rel.classes(), std::nullopt};
}

struct CandidatePartitionSet {
  std::vector<NestStructure> partitions;
  std::vector<double> thresholds;
};

// Thresholds: 0, every pairwise distance, and just above the largest distance.
// Transitive relations only; duplicates removed. The result is a refinement
// chain, so it has at most |X| members.
inline CandidatePartitionSet candidate_partitions(const DistanceMatrix& d) {
  std::vector<double> eps{0.0};
  double top = 0.0;
  for (std::size_t a = 0; a < d.d.size(); ++a)
    for (std::size_t b = a + 1; b < d.d.size(); ++b) {
      eps.push_back(d.d[a][b]);
      top = std::max(top, d.d[a][b]);
    }
  eps.push_back(std::nextafter(top, std::numeric_limits<double>::infinity()));
  std::sort(eps.begin(), eps.end());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
  CandidatePartitionSet out;
  for (double e : eps) {
    auto r = epsilon_partition(d, e);
    if (!r.partition) continue;
    if (std::find(out.partitions.begin(), out.partitions.end(), *r.partition) != out.partitions.end()) continue;
    out.partitions.push_back(*r.partition);
    out.thresholds.push_back(e);
  }
  return out;
}

struct Assumption1Witness {
  std::size_t block_i = 0, block_j = 0;
  Menu subset_i, subset_j;
};

struct Assumption1Report {
  bool passed = true;
  std::vector<Assumption1Witness> failures;  // (A_i, A_j) with no separating menus
};

// Brute force: for every proper nonempty A_i of X_i and nonempty A_j of X_j,
// look for menus agreeing on A_i and X_j whose A_i/A_j odds differ.
inline Assumption1Report check_assumption1(const NscModel& model, double tol = kDefaultTolerance,
                                           std::size_t cap = 10) {
  const std::size_t n = model.universe.size();
  if (n > cap) throw Error("universe-too-large", "assumption check is capped at 10 alternatives");
  const ChoiceTable t = full_choice_table(model, cap);
  const auto& s = model.structure;
  Assumption1Report rep;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::pair<double, double>> range;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (i == j) continue;
      const Menu Xi = s.block(i), Xj = s.block(j);
      for_each_subset(Xi, [&](Menu Ai) {
        if (Ai == Xi) return;
        for_each_subset(Xj, [&](Menu Aj) {
          range.clear();
          bool found = false;
          for_each_subset(t.universe().all(), [&](Menu A) {
            if (found || (A & Ai).empty() || (A & Aj).empty()) return;
            const double lr = std::log(t.prob(Ai, A)) - std::log(t.prob(Aj, A));
            auto key = std::make_pair((A & Ai).bits(), (A & Xj).bits());
            auto [it, fresh] = range.emplace(key, std::make_pair(lr, lr));
            if (fresh) return;
            it->second.first = std::min(it->second.first, lr);
            it->second.second = std::max(it->second.second, lr);
            if (it->second.second - it->second.first > tol) found = true;
          });
          if (!found) {
            rep.passed = false;
            rep.failures.push_back({i, j, Ai, Aj});
          }
        });
      });
    }
  return rep;
}

}  // namespace nsc
