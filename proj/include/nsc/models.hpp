// Luce, NSC, nested logit and 3-step NSC: parameters and choice probabilities.
#pragma once

#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include "nsc/choice_table.hpp"
#include "nsc/partition.hpp"

namespace nsc {

inline constexpr std::size_t kMaxBlockSize = 24;

// Values over every subset of every block, indexed by the compressed subset
// mask. The empty subset holds 0.
class BlockValues {
 public:
  BlockValues() = default;
  explicit BlockValues(const NestStructure& s) : blocks_(s.blocks()) {
    for (Menu b : blocks_) {
      if (b.size() > kMaxBlockSize) throw Error("block-too-large", "blocks are capped at 24 alternatives");
      values_.emplace_back(std::size_t{1} << b.size(), 0.0);
    }
  }

  std::size_t size() const { return blocks_.size(); }
  Menu block(std::size_t k) const { return blocks_.at(k); }

  double operator()(std::size_t k, Menu sub) const { return values_.at(k)[compress(sub, blocks_.at(k))]; }
  void set(std::size_t k, Menu sub, double value) {
    if (sub.empty() || !sub.subset_of(blocks_.at(k)))
      throw Error("invalid-subset", "value must be set on a nonempty subset of the block");
    values_[k][compress(sub, blocks_[k])] = value;
  }
  void scale(double c) {
    for (auto& row : values_)
      for (double& x : row) x *= c;
  }
  // Checks strict positivity on every nonempty subset.
  void validate() const {
    for (std::size_t k = 0; k < values_.size(); ++k)
      for (std::size_t s = 1; s < values_[k].size(); ++s)
        if (!(values_[k][s] > 0.0) || !std::isfinite(values_[k][s]))
          throw Error("nonpositive-v-value", "nest value must be positive on nonempty subsets");
  }

 private:
  std::vector<Menu> blocks_;
  std::vector<std::vector<double>> values_;
};

namespace detail {

inline void require_member(std::size_t a, Menu menu) {
  if (!menu.contains(a)) throw Error("alternative-not-in-menu", "alternative is not a member of the menu");
}

inline void require_menu(Menu menu, std::size_t n) {
  if (menu.empty() || !menu.subset_of(Menu::first_n(n)))
    throw Error("invalid-menu", "menu must be a nonempty subset of the universe");
}

inline void require_positive(const std::vector<double>& u, std::size_t n) {
  if (u.size() != n) throw Error("invalid-utility", "utility vector length must match the universe");
  for (double x : u)
    if (!(x > 0.0) || !std::isfinite(x)) throw Error("nonpositive-utility", "utilities must be positive");
}

inline double sum_over(const std::vector<double>& u, Menu m) {
  double s = 0.0;
  for (std::size_t i : m) s += u[i];
  return s;
}

inline double position_in(std::size_t a, Menu menu) {
  return static_cast<double>(Menu(menu.bits() & ((std::uint64_t{1} << a) - 1)).size());
}

}  // namespace detail

struct LuceModel {
  Universe universe;
  std::vector<double> u;

  std::vector<double> row(Menu menu) const {
    detail::require_menu(menu, universe.size());
    const double s = detail::sum_over(u, menu);
    std::vector<double> out;
    for (std::size_t i : menu) out.push_back(u[i] / s);
    return out;
  }
};

inline double luce_prob(const std::vector<double>& u, std::size_t a, Menu menu) {
  detail::require_member(a, menu);
  double s = 0.0;
  for (std::size_t i : menu) {
    if (i >= u.size() || !(u[i] > 0.0)) throw Error("nonpositive-utility", "utilities must be positive");
    s += u[i];
  }
  return u[a] / s;
}

struct NscModel {
  Universe universe;
  NestStructure structure;
  std::vector<double> u;
  BlockValues v;

  void validate() const {
    if (structure.universe_size() != universe.size())
      throw Error("invalid-model", "nest structure does not match the universe");
    detail::require_positive(u, universe.size());
    if (v.size() != structure.size()) throw Error("missing-v-entry", "nest values missing for some block");
    for (std::size_t k = 0; k < structure.size(); ++k)
      if (v.block(k) != structure.block(k)) throw Error("missing-v-entry", "nest values do not match the blocks");
    v.validate();
  }

  std::vector<double> row(Menu menu) const {
    detail::require_menu(menu, universe.size());
    const std::size_t k_count = structure.size();
    std::vector<double> sums(k_count, 0.0), vals(k_count, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      Menu part = menu & structure.block(k);
      if (part.empty()) continue;
      sums[k] = detail::sum_over(u, part);
      vals[k] = v(k, part);
      total += vals[k];
    }
    std::vector<double> out;
    for (std::size_t i : menu) {
      std::size_t k = structure.block_of(i);
      out.push_back(vals[k] / total * (u[i] / sums[k]));
    }
    return out;
  }
};

inline double nsc_prob(const NscModel& m, std::size_t a, Menu menu) {
  detail::require_member(a, menu);
  return m.row(menu)[static_cast<std::size_t>(detail::position_in(a, menu))];
}

struct NestedLogitModel {
  Universe universe;
  NestStructure structure;
  std::vector<double> u;
  std::vector<double> eta;

  // Random-utility consistent iff every exponent is at most one.
  bool random_utility() const {
    for (double e : eta)
      if (e > 1.0) return false;
    return true;
  }

  void validate() const {
    if (structure.universe_size() != universe.size())
      throw Error("invalid-model", "nest structure does not match the universe");
    detail::require_positive(u, universe.size());
    if (eta.size() != structure.size()) throw Error("invalid-model", "one exponent per block is required");
    for (double e : eta)
      if (!(e >= 0.0) || !std::isfinite(e)) throw Error("invalid-model", "exponents must be finite and nonnegative");
  }

  // Nest terms are combined in log space so large exponents cannot overflow.
  std::vector<double> row(Menu menu) const {
    detail::require_menu(menu, universe.size());
    const std::size_t k_count = structure.size();
    std::vector<double> sums(k_count, 0.0), logv(k_count, -std::numeric_limits<double>::infinity());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < k_count; ++k) {
      Menu part = menu & structure.block(k);
      if (part.empty()) continue;
      sums[k] = detail::sum_over(u, part);
      logv[k] = eta[k] * std::log(sums[k]);
      top = std::max(top, logv[k]);
    }
    double z = 0.0;
    for (std::size_t k = 0; k < k_count; ++k)
      if (sums[k] > 0.0) z += std::exp(logv[k] - top);
    std::vector<double> out;
    for (std::size_t i : menu) {
      std::size_t k = structure.block_of(i);
      out.push_back(std::exp(logv[k] - top) / z * (u[i] / sums[k]));
    }
    return out;
  }

  NscModel to_nsc() const {
    NscModel m{universe, structure, u, BlockValues(structure)};
    for (std::size_t k = 0; k < structure.size(); ++k)
      for_each_subset(structure.block(k),
                      [&](Menu s) { m.v.set(k, s, std::pow(detail::sum_over(u, s), eta[k])); });
    return m;
  }
};

inline double nested_logit_prob(const NestedLogitModel& m, std::size_t a, Menu menu) {
  detail::require_member(a, menu);
  return m.row(menu)[static_cast<std::size_t>(detail::position_in(a, menu))];
}

// Three nested Luce stages: outer blocks via w, inner blocks via v, members via u.
// `inner` is a partition of the whole universe refining `outer`.
struct ThreeStepModel {
  Universe universe;
  NestStructure outer;
  NestStructure inner;
  std::vector<double> u;
  BlockValues v;  // over inner blocks
  BlockValues w;  // over outer blocks

  void validate() const {
    if (outer.universe_size() != universe.size() || inner.universe_size() != universe.size())
      throw Error("invalid-model", "nest structures do not match the universe");
    if (!inner.refines(outer)) throw Error("invalid-model", "inner partition must refine the outer partition");
    detail::require_positive(u, universe.size());
    if (v.size() != inner.size() || w.size() != outer.size())
      throw Error("missing-v-entry", "nest values missing for some block");
    v.validate();
    w.validate();
  }

  std::vector<double> row(Menu menu) const {
    detail::require_menu(menu, universe.size());
    std::vector<double> wv(outer.size(), 0.0), vv(inner.size(), 0.0), us(inner.size(), 0.0);
    std::vector<double> vsum(outer.size(), 0.0);
    double wtotal = 0.0;
    for (std::size_t k = 0; k < outer.size(); ++k) {
      Menu part = menu & outer.block(k);
      if (part.empty()) continue;
      wv[k] = w(k, part);
      wtotal += wv[k];
    }
    for (std::size_t l = 0; l < inner.size(); ++l) {
      Menu part = menu & inner.block(l);
      if (part.empty()) continue;
      vv[l] = v(l, part);
      us[l] = detail::sum_over(u, part);
      vsum[outer.block_of(inner.block(l).lowest())] += vv[l];
    }
    std::vector<double> out;
    for (std::size_t i : menu) {
      std::size_t l = inner.block_of(i), k = outer.block_of(i);
      out.push_back(wv[k] / wtotal * (vv[l] / vsum[k]) * (u[i] / us[l]));
    }
    return out;
  }
};

inline double three_step_prob(const ThreeStepModel& m, std::size_t a, Menu menu) {
  detail::require_member(a, menu);
  return m.row(menu)[static_cast<std::size_t>(detail::position_in(a, menu))];
}

template <class M>
concept ChoiceModel = requires(const M& m, Menu menu) {
  { m.universe } -> std::convertible_to<Universe>;
  { m.row(menu) } -> std::convertible_to<std::vector<double>>;
};

inline constexpr std::size_t kDefaultTableCap = 12;

// Tabulates the model on every nonempty menu.
template <ChoiceModel M>
ChoiceTable full_choice_table(const M& model, std::size_t cap = kDefaultTableCap) {
  const std::size_t n = model.universe.size();
  if (n > cap) throw Error("universe-too-large", "full tables are capped at " + std::to_string(cap) + " alternatives");
  ChoiceTable t(model.universe);
  for_each_subset(model.universe.all(), [&](Menu m) { t.set(m, model.row(m)); });
  return t;
}

// Nest-value presets.
struct LinearPreset {
  std::vector<double> lambda;  // per block, >= 0
  std::vector<double> nu;      // per block
};
struct ThresholdPreset {
  std::vector<std::size_t> tau;  // per block, in 1..|X_i|
  std::vector<double> eta;        // exponent above the threshold
  std::vector<double> eta_tilde;  // exponent at or below the threshold
};
struct SaliencePreset {
  std::vector<double> salience;  // per alternative, > 0
};
using PresetNestValueSpec = std::variant<LinearPreset, ThresholdPreset, SaliencePreset>;

inline BlockValues make_preset_v(const PresetNestValueSpec& spec, const NestStructure& s,
                                 const std::vector<double>& u) {
  detail::require_positive(u, s.universe_size());
  const std::size_t k_count = s.size();
  auto need = [&](std::size_t got, const char* what) {
    if (got != k_count) throw Error("invalid-preset", std::string(what) + " needs one entry per block");
  };
  BlockValues v(s);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearPreset>) {
          need(p.lambda.size(), "lambda");
          need(p.nu.size(), "nu");
          for (std::size_t k = 0; k < k_count; ++k) {
            if (p.lambda[k] < 0.0) throw Error("invalid-preset", "lambda must be nonnegative");
            for_each_subset(s.block(k), [&](Menu a) {
              double val = p.lambda[k] * detail::sum_over(u, a) + p.nu[k];
              if (!(val > 0.0)) throw Error("nonpositive-v-value", "linear nest value is not positive");
              v.set(k, a, val);
            });
          }
        } else if constexpr (std::is_same_v<T, ThresholdPreset>) {
          need(p.tau.size(), "tau");
          need(p.eta.size(), "eta");
          need(p.eta_tilde.size(), "eta_tilde");
          for (std::size_t k = 0; k < k_count; ++k) {
            if (p.tau[k] < 1 || p.tau[k] > s.block(k).size())
              throw Error("invalid-preset", "tau must lie in 1..|block|");
            if (!(p.eta[k] > 0.0) || !(p.eta_tilde[k] > 0.0))
              throw Error("invalid-preset", "threshold exponents must be positive");
            for_each_subset(s.block(k), [&](Menu a) {
              double e = a.size() > p.tau[k] ? p.eta[k] : p.eta_tilde[k];
              v.set(k, a, std::pow(detail::sum_over(u, a), e));
            });
          }
        } else {
          if (p.salience.size() != s.universe_size())
            throw Error("invalid-preset", "salience needs one entry per alternative");
          for (double x : p.salience)
            if (!(x > 0.0)) throw Error("invalid-preset", "salience must be positive");
          for (std::size_t k = 0; k < k_count; ++k)
            for_each_subset(s.block(k), [&](Menu a) {
              double best = 0.0;
              for (std::size_t i : a) best = std::max(best, p.salience[i]);
              v.set(k, a, best);
            });
        }
      },
      spec);
  return v;
}

struct DegeneracyReport {
  bool degenerate = false;
  std::vector<std::size_t> proportional_blocks;
};

// A block is proportional when some member a has sum(u)/v(A) = u(a)/v({a})
// for every A in the block containing a. Singleton blocks always qualify.
inline DegeneracyReport is_degenerate(const NscModel& m, double tol = 1e-9) {
  DegeneracyReport r;
  for (std::size_t k = 0; k < m.structure.size(); ++k) {
    Menu block = m.structure.block(k);
    bool proportional = false;
    for (std::size_t a : block) {
      const double ref = std::log(m.u[a] / m.v(k, Menu::single(a)));
      bool all = true;
      for_each_subset(block, [&](Menu s) {
        if (all && s.contains(a) && std::abs(std::log(detail::sum_over(m.u, s) / m.v(k, s)) - ref) > tol)
          all = false;
      });
      if (all) {
        proportional = true;
        break;
      }
    }
    if (proportional) r.proportional_blocks.push_back(k);
  }
  r.degenerate = r.proportional_blocks.size() >= 2;
  return r;
}

}  // namespace nsc
