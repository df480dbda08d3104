// Checkers for the behavioural axioms. Every checker scans its quantifier
// domain in a fixed order (menus by bitmask, then alternatives by index), so
// the first witness reported is the lexicographically first violation.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nsc/choice_table.hpp"
#include "nsc/models.hpp"
#include "nsc/similarity.hpp"

namespace nsc {

struct Witness {
  std::vector<Menu> menus;
  std::vector<std::size_t> alternatives;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct AxiomReport {
  std::string axiom;
  bool passed = true;
  std::vector<Witness> witnesses;
  double tolerance = 0.0;
  std::vector<std::string> flags;
  std::size_t checked = 0;  // instances whose premise held
  std::size_t skipped = 0;  // instances skipped (undefined ratio)

  static constexpr std::size_t kMaxWitnesses = 3;

  // Records a violation; returns true once enough witnesses are collected.
  bool fail(Witness w) {
    passed = false;
    witnesses.push_back(std::move(w));
    return witnesses.size() >= kMaxWitnesses;
  }
  void flag(std::string f) {
    if (std::find(flags.begin(), flags.end(), f) == flags.end()) flags.push_back(std::move(f));
  }
};

namespace detail {

// Dense log-probability cache for a complete table.
class LogTable {
 public:
  explicit LogTable(const ChoiceTable& t) : n_(t.universe().size()) {
    t.require_complete();
    if (n_ > 20) throw Error("universe-too-large", "axiom checks are capped at 20 alternatives");
    rows_.resize(std::size_t{1} << n_);
    for_each_subset(t.universe().all(), [&](Menu m) {
      auto r = t.row(m);
      auto& dst = rows_[m.bits()];
      for (double p : r) dst.push_back(std::log(p));
    });
  }
  std::size_t n() const { return n_; }
  Menu all() const { return Menu::first_n(n_); }
  double logp(std::size_t a, Menu m) const {
    return rows_[m.bits()][static_cast<std::size_t>(position_in(a, m))];
  }
  // log p(S, A) for S ⊆ A.
  double logp(Menu s, Menu m) const {
    const auto& r = rows_[m.bits()];
    double top = -1e300;
    std::size_t k = 0;
    for (std::size_t i : m) {
      if (s.contains(i)) top = std::max(top, r[k]);
      ++k;
    }
    double z = 0.0;
    k = 0;
    for (std::size_t i : m) {
      if (s.contains(i)) z += std::exp(r[k] - top);
      ++k;
    }
    return top + std::log(z);
  }
  double log_ratio(std::size_t a, std::size_t b, Menu m) const { return logp(a, m) - logp(b, m); }

 private:
  std::size_t n_;
  std::vector<std::vector<double>> rows_;
};

inline Menu pair_of(std::size_t a, std::size_t b) { return Menu::single(a).with(b); }

inline std::size_t class_count(const SimilarityRelation& sim) {
  if (!sim.transitive()) return 0;
  return sim.classes().size();
}

// Shared scan over (A, a<b in A, x not in A): premise(a, b, x) selects the
// instances where the a/b ratio must be unchanged by adding x.
template <class Premise>
void ratio_invariance_scan(const LogTable& lt, double tol, AxiomReport& rep, Premise&& premise) {
  bool stop = false;
  for_each_subset(lt.all(), [&](Menu A) {
    if (stop || A.size() < 2) return;
    for (std::size_t a : A)
      for (std::size_t b : A) {
        if (b <= a) continue;
        for (std::size_t x : lt.all() - A) {
          if (stop || !premise(a, b, x)) continue;
          ++rep.checked;
          const double lhs = lt.log_ratio(a, b, A), rhs = lt.log_ratio(a, b, A.with(x));
          if (std::abs(lhs - rhs) > tol) stop = rep.fail({{A, A.with(x)}, {a, b, x}, lhs, rhs});
        }
      }
  });
}

}  // namespace detail

inline AxiomReport check_iia(const ChoiceTable& t, double tol = kDefaultTolerance) {
  detail::LogTable lt(t);
  AxiomReport rep{"iia", true, {}, tol, {}};
  bool stop = false;
  for_each_subset(lt.all(), [&](Menu A) {
    if (stop || A.size() < 3) return;
    for (std::size_t a : A)
      for (std::size_t b : A) {
        if (stop || b <= a) continue;
        ++rep.checked;
        const Menu P = detail::pair_of(a, b);
        const double lhs = lt.log_ratio(a, b, P), rhs = lt.log_ratio(a, b, A);
        if (std::abs(lhs - rhs) > tol) stop = rep.fail({{P, A}, {a, b}, lhs, rhs});
      }
  });
  return rep;
}

inline AxiomReport check_isa(const ChoiceTable& t, double tol = kDefaultTolerance) {
  detail::LogTable lt(t);
  const auto sim = revealed_similarity(t, tol);
  AxiomReport rep{"isa", true, {}, tol, {}};
  if (detail::class_count(sim) < 3) rep.flag("fewer-than-three-dissimilar-alternatives");
  detail::ratio_invariance_scan(lt, tol, rep, [&](std::size_t a, std::size_t b, std::size_t x) {
    return sim.related(a, x) == sim.related(b, x);
  });
  return rep;
}

inline AxiomReport check_iaa(const ChoiceTable& t, double tol = kDefaultTolerance) {
  detail::LogTable lt(t);
  const auto sim = revealed_similarity(t, tol);
  AxiomReport rep{"iaa", true, {}, tol, {}};
  detail::ratio_invariance_scan(lt, tol, rep, [&](std::size_t a, std::size_t b, std::size_t x) {
    return sim.related(a, x) != sim.related(b, x);
  });
  return rep;
}

// Adding x similar to a must strictly lower a's odds against a dissimilar b.
inline AxiomReport check_similarity_effect(const ChoiceTable& t, double tol = kDefaultTolerance) {
  detail::LogTable lt(t);
  const auto sim = revealed_similarity(t, tol);
  AxiomReport rep{"similarity-effect", true, {}, tol, {}};
  bool stop = false;
  for_each_subset(lt.all(), [&](Menu A) {
    if (stop || A.size() < 2) return;
    for (std::size_t a : A)
      for (std::size_t b : A) {
        if (a == b) continue;
        for (std::size_t x : lt.all() - A) {
          if (stop || !sim.related(a, x) || sim.related(b, x)) continue;
          ++rep.checked;
          const double lhs = lt.log_ratio(a, b, A), rhs = lt.log_ratio(a, b, A.with(x));
          if (!(lhs - rhs > tol)) stop = rep.fail({{A, A.with(x)}, {a, b, x}, lhs, rhs});
        }
      }
  });
  if (rep.checked == 0) rep.flag("vacuous");
  return rep;
}

namespace detail {

enum class RegularityKind { all, similar, dissimilar };

inline AxiomReport regularity(const ChoiceTable& t, double tol, RegularityKind kind) {
  LogTable lt(t);
  SimilarityRelation sim;
  if (kind != RegularityKind::all) sim = revealed_similarity(t, tol);
  AxiomReport rep{kind == RegularityKind::all       ? "regularity"
                  : kind == RegularityKind::similar ? "similar-regularity"
                                                    : "dissimilar-regularity",
                  true,
                  {},
                  tol,
                  {}};
  bool stop = false;
  for_each_subset(lt.all(), [&](Menu A) {
    if (stop) return;
    for (std::size_t x : A)
      for (std::size_t y : lt.all() - A) {
        if (stop) return;
        if (kind == RegularityKind::similar && !sim.related(x, y)) continue;
        if (kind == RegularityKind::dissimilar && sim.related(x, y)) continue;
        ++rep.checked;
        const double lhs = lt.logp(x, A.with(y)), rhs = lt.logp(x, A);
        if (lhs - rhs > tol) stop = rep.fail({{A, A.with(y)}, {x, y}, lhs, rhs});
      }
  });
  return rep;
}

}  // namespace detail

inline AxiomReport check_regularity(const ChoiceTable& t, double tol = kDefaultTolerance) {
  return detail::regularity(t, tol, detail::RegularityKind::all);
}
inline AxiomReport check_similar_regularity(const ChoiceTable& t, double tol = kDefaultTolerance) {
  return detail::regularity(t, tol, detail::RegularityKind::similar);
}
inline AxiomReport check_dissimilar_regularity(const ChoiceTable& t, double tol = kDefaultTolerance) {
  return detail::regularity(t, tol, detail::RegularityKind::dissimilar);
}

// Log Ratio Invariance. For a and x, with A ranging over subsets of a's
// similarity class, Q(A) = log(odds(A vs x) / odds(a vs x)) / log(odds(A vs a))
// must not depend on A. Menus where the denominator vanishes are skipped.
inline AxiomReport check_lri(const ChoiceTable& t, double tol = kDefaultTolerance) {
  detail::LogTable lt(t);
  const auto sim = revealed_similarity(t, tol);
  AxiomReport rep{"lri", true, {}, tol, {}};
  if (!sim.transitive()) rep.flag("similarity-not-transitive");
  bool stop = false;
  for (std::size_t a = 0; a < lt.n() && !stop; ++a) {
    const Menu cls = sim.neighbors(a);
    for (std::size_t x = 0; x < lt.n() && !stop; ++x) {
      if (x == a) continue;
      const Menu ax = detail::pair_of(a, x);
      const double base = lt.log_ratio(a, x, ax);
      bool have = false;
      Menu first;
      double q0 = 0.0;
      for_each_subset(cls, [&](Menu A) {
        if (stop) return;
        const Menu Ax = A.with(x), Aa = A.with(a);
        const double den = lt.logp(A, Aa) - lt.logp(a, Aa);
        if (std::abs(den) <= tol) {
          ++rep.skipped;
          return;
        }
        const double num = lt.logp(A, Ax) - lt.logp(x, Ax) - base;
        const double q = num / den;
        ++rep.checked;
        if (!have) {
          have = true;
          first = A;
          q0 = q;
          return;
        }
        if (std::abs(q - q0) > tol * std::max(1.0, std::abs(q0)))
          stop = rep.fail({{first, A}, {a, x}, q0, q});
      });
    }
  }
  if (rep.skipped > 0) rep.flag("zero-denominator-skipped");
  if (rep.checked == 0) rep.flag("vacuous");
  return rep;
}

struct RliOptions {
  std::size_t exhaustive_class_limit = 10;  // larger classes are sampled
  std::size_t samples = 200000;
  std::uint64_t seed = 0x5eed;
};

// Relative Likelihood Independence. For each similarity class and each x,
// pairs (A, B) of nonempty class subsets get L = log odds(A vs B within A∪B)
// and R = log(odds(A vs x) / odds(B vs x)); a violation is two pairs with
// L1 > L2 + tol but R1 < R2 - tol. Sorting by L finds one in O(P log P).
inline AxiomReport check_rli(const ChoiceTable& t, double tol = kDefaultTolerance, RliOptions opt = {}) {
  detail::LogTable lt(t);
  const auto sim = revealed_similarity(t, tol);
  AxiomReport rep{"rli", true, {}, tol, {}};
  if (!sim.transitive()) {
    rep.flag("similarity-not-transitive");
    return rep;
  }
  const auto classes = sim.classes();
  struct Entry {
    double L, R;
    Menu A, B;
  };
  std::mt19937_64 rng(opt.seed);
  for (Menu cls : classes.blocks()) {
    if (!rep.passed) break;
    std::vector<Menu> subs;
    for_each_subset(cls, [&](Menu s) { subs.push_back(s); });
    const bool sampled = cls.size() > opt.exhaustive_class_limit;
    if (sampled) rep.flag("sampled");
    for (std::size_t x = 0; x < lt.n() && rep.passed; ++x) {
      auto odds_x = [&](Menu S) { return lt.logp(S, S.with(x)) - lt.logp(x, S.with(x)); };
      std::vector<double> ox(subs.size());
      for (std::size_t k = 0; k < subs.size(); ++k) ox[k] = odds_x(subs[k]);
      std::vector<Entry> es;
      auto push = [&](std::size_t i, std::size_t j) {
        const Menu A = subs[i], B = subs[j], U = A | B;
        es.push_back({lt.logp(A, U) - lt.logp(B, U), ox[i] - ox[j], A, B});
      };
      if (!sampled) {
        es.reserve(subs.size() * subs.size());
        for (std::size_t i = 0; i < subs.size(); ++i)
          for (std::size_t j = 0; j < subs.size(); ++j) push(i, j);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, subs.size() - 1);
        for (std::size_t s = 0; s < opt.samples; ++s) push(pick(rng), pick(rng));
      }
      rep.checked += es.size();
      std::stable_sort(es.begin(), es.end(), [](const Entry& p, const Entry& q) { return p.L < q.L; });
      // For each entry, the maximal R among entries with L below L - tol.
      std::size_t lo = 0, best = es.size();
      for (std::size_t k = 0; k < es.size(); ++k) {
        while (lo < k && es[lo].L < es[k].L - tol) {
          if (best == es.size() || es[lo].R > es[best].R) best = lo;
          ++lo;
        }
        if (best != es.size() && es[k].R < es[best].R - tol) {
          const Entry &hi = es[k], &low = es[best];
          rep.fail({{hi.A, hi.B, low.A, low.B}, {x}, hi.L - low.L, hi.R - low.R});
          break;
        }
      }
    }
  }
  return rep;
}

// ISA-1: if x leaves the a/x and b/x odds unchanged when {a,b,x} forms, it
// leaves the a/b odds unchanged in every menu.
inline AxiomReport check_isa1(const ChoiceTable& t, double tol = kDefaultTolerance) {
  detail::LogTable lt(t);
  AxiomReport rep{"isa-1", true, {}, tol, {}};
  auto premise = [&](std::size_t a, std::size_t b, std::size_t x) {
    const Menu abx = detail::pair_of(a, b).with(x);
    return std::abs(lt.log_ratio(a, x, detail::pair_of(a, x)) - lt.log_ratio(a, x, abx)) <= tol &&
           std::abs(lt.log_ratio(b, x, detail::pair_of(b, x)) - lt.log_ratio(b, x, abx)) <= tol;
  };
  detail::ratio_invariance_scan(lt, tol, rep, premise);
  return rep;
}

// ISA-2: if some menu B moves the a/x odds away from their pairwise value and
// some menu C does the same for b/x, then x leaves the a/b odds unchanged.
inline AxiomReport check_isa2(const ChoiceTable& t, double tol = kDefaultTolerance) {
  detail::LogTable lt(t);
  AxiomReport rep{"isa-2", true, {}, tol, {}};
  const std::size_t n = lt.n();
  // mover[a][x]: first menu whose a/x odds differ from the pairwise odds.
  std::vector<std::vector<Menu>> mover(n, std::vector<Menu>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t x = 0; x < n; ++x) {
      if (a == x) continue;
      const Menu P = detail::pair_of(a, x);
      const double ref = lt.log_ratio(a, x, P);
      detail::for_each_superset(P, lt.all(), [&](Menu B) {
        if (mover[a][x].empty() && std::abs(lt.log_ratio(a, x, B) - ref) > tol) mover[a][x] = B;
      });
    }
  bool stop = false;
  for_each_subset(lt.all(), [&](Menu A) {
    if (stop || A.size() < 2) return;
    for (std::size_t a : A)
      for (std::size_t b : A) {
        if (b <= a) continue;
        for (std::size_t x : lt.all() - A) {
          if (stop || mover[a][x].empty() || mover[b][x].empty()) continue;
          ++rep.checked;
          const double lhs = lt.log_ratio(a, b, A), rhs = lt.log_ratio(a, b, A.with(x));
          if (std::abs(lhs - rhs) > tol)
            stop = rep.fail({{A, mover[a][x], mover[b][x], A.with(x)}, {a, b, x}, lhs, rhs});
        }
      }
  });
  return rep;
}

inline AxiomReport check_gisa(const ChoiceTable& t, double tol = kDefaultTolerance) {
  detail::LogTable lt(t);
  const auto sim = revealed_similarity(t, tol);
  const auto approx = approx_revealed_similarity(t, sim, tol);
  AxiomReport rep{"gisa", true, {}, tol, {}};
  if (!approx.vacuous.empty()) rep.flag("vacuous-approximate-similarity");
  detail::ratio_invariance_scan(lt, tol, rep, [&](std::size_t a, std::size_t b, std::size_t x) {
    return (sim.related(a, x) && sim.related(b, x)) || (approx.bowtie.related(a, x) && approx.bowtie.related(b, x)) ||
           (!approx.combined.related(a, x) && !approx.combined.related(b, x));
  });
  return rep;
}

// Consistency of revealed similarities: x ~ x' implies x and x' have the same
// approximately-similar partners.
inline AxiomReport check_consistency(const ChoiceTable& t, double tol = kDefaultTolerance) {
  const auto sim = revealed_similarity(t, tol);
  const auto approx = approx_revealed_similarity(t, sim, tol);
  AxiomReport rep{"consistency", true, {}, tol, {}};
  const std::size_t n = t.universe().size();
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t xp = 0; xp < n; ++xp) {
      if (x == xp || !sim.related(x, xp)) continue;
      for (std::size_t y = 0; y < n; ++y) {
        ++rep.checked;
        const bool l = approx.bowtie.related(x, y), r = approx.bowtie.related(xp, y);
        if (l != r && rep.fail({{}, {x, xp, y}, l ? 1.0 : 0.0, r ? 1.0 : 0.0})) return rep;
      }
    }
  return rep;
}

// Increasing NSC: v(A) >= v(B) whenever B ⊆ A within a block. Checking single
// removals suffices.
inline AxiomReport check_increasing(const NscModel& m, double tol = kDefaultTolerance) {
  AxiomReport rep{"increasing", true, {}, tol, {}};
  for (std::size_t k = 0; k < m.structure.size(); ++k) {
    bool stop = false;
    for_each_subset(m.structure.block(k), [&](Menu A) {
      if (stop) return;
      for (std::size_t i : A) {
        const Menu B = A.without(i);
        if (B.empty()) continue;
        ++rep.checked;
        const double lhs = m.v(k, A), rhs = m.v(k, B);
        if (std::log(lhs) - std::log(rhs) < -tol) {
          stop = rep.fail({{B, A}, {}, lhs, rhs});
          return;
        }
      }
    });
    if (stop) break;
  }
  return rep;
}

}  // namespace nsc
