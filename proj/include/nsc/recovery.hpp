// Exact-data inversion: NSC parameters from a complete table, nested-logit
// exponents from NSC nest values, and the 3-step tree.
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsc/axioms.hpp"
#include "nsc/models.hpp"
#include "nsc/similarity.hpp"

namespace nsc {

namespace detail {

inline std::string witness_json(const Universe& U, const Witness& w) {
  nlohmann::json menus = nlohmann::json::array(), alts = nlohmann::json::array();
  for (Menu m : w.menus) menus.push_back(U.names(m));
  for (std::size_t a : w.alternatives) alts.push_back(U.id(a));
  return nlohmann::json{{"menus", menus}, {"alternatives", alts}, {"lhs", w.lhs}, {"rhs", w.rhs}}.dump();
}

// Within-block Luce utilities from p(a, X_i), scaled so each block's minimum is 1.
inline void fill_utilities(const ChoiceTable& t, const std::vector<Menu>& blocks, std::vector<double>& u) {
  for (Menu b : blocks) {
    double lo = 1e300;
    for (std::size_t a : b) lo = std::min(lo, t.prob(a, b));
    for (std::size_t a : b) u[a] = t.prob(a, b) / lo;
  }
}

// Nest values for `ids` (indices into vals) whose blocks partition a ground set
// Z, built from menus inside Z. The first block is the reference:
//   v(S) = p(S, S∪B0) / p(B0, S∪B0)                          for S in later blocks,
//   v(S) = p(S, S∪B1) / p(B1, S∪B1) * p(B1, B0∪B1) / p(B0, B0∪B1)  for S in B0,
// then everything is divided by v(B0). A lone block gets the constant 1.
inline void fill_block_values(const ChoiceTable& t, const std::vector<std::size_t>& ids, BlockValues& vals) {
  if (ids.size() == 1) {
    for_each_subset(vals.block(ids[0]), [&](Menu s) { vals.set(ids[0], s, 1.0); });
    return;
  }
  const Menu b0 = vals.block(ids[0]), b1 = vals.block(ids[1]);
  const double link = t.prob(b1, b0 | b1) / t.prob(b0, b0 | b1);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const Menu ref = r == 0 ? b1 : b0;
    for_each_subset(vals.block(ids[r]), [&](Menu s) {
      double val = t.prob(s, s | ref) / t.prob(ref, s | ref);
      if (r == 0) val *= link;
      vals.set(ids[r], s, val);
    });
  }
  const double norm = vals(ids[0], b0);
  for (std::size_t id : ids)
    for_each_subset(vals.block(id), [&](Menu s) { vals.set(id, s, vals(id, s) / norm); });
}

inline double max_log_error(const ChoiceTable& a, const ChoiceTable& b) {
  double worst = 0.0;
  for (Menu m : a.menus()) {
    auto ra = a.row(m), rb = b.row(m);
    for (std::size_t k = 0; k < ra.size(); ++k) worst = std::max(worst, std::abs(std::log(ra[k] / rb[k])));
  }
  return worst;
}

}  // namespace detail

// Inverts a complete table satisfying ISA into the canonical NSC: blocks are
// the classes of revealed similarity, min utility per block is 1 and v of the
// first block's full set is 1. A single block gets v(A) = sum(u, A)/sum(u, X),
// the nested logit with exponent 1.
inline NscModel recover_nsc(const ChoiceTable& t, double tol = kDefaultTolerance) {
  t.require_complete();
  const Universe& U = t.universe();
  const auto isa = check_isa(t, tol);
  if (!isa.passed)
    throw Error("isa-violated", "table violates independence of symmetric alternatives",
                detail::witness_json(U, isa.witnesses.front()));
  const auto sim = revealed_similarity(t, tol);
  NscModel m{U, sim.classes(), std::vector<double>(U.size(), 0.0), {}};
  m.v = BlockValues(m.structure);
  detail::fill_utilities(t, m.structure.blocks(), m.u);
  if (m.structure.size() == 1) {
    const double total = detail::sum_over(m.u, U.all());
    for_each_subset(U.all(), [&](Menu s) { m.v.set(0, s, detail::sum_over(m.u, s) / total); });
  } else {
    std::vector<std::size_t> ids(m.structure.size());
    for (std::size_t k = 0; k < ids.size(); ++k) ids[k] = k;
    detail::fill_block_values(t, ids, m.v);
  }
  const auto deg = is_degenerate(m, tol);
  if (deg.degenerate)
    throw Error("degenerate-table", "more than one block is proportional; the nest structure is not unique");
  const double err = detail::max_log_error(full_choice_table(m, 20), t);
  if (err > tol) {
    if (m.structure.size() <= 2)
      throw Error("fewer-than-three-nests-with-ambiguity",
                  "recovered model does not reproduce the table and fewer than three nests exist");
    throw Error("round-trip-failed", "recovered model does not reproduce the table");
  }
  return m;
}

struct EtaRecovery {
  std::optional<NestedLogitModel> model;
  std::vector<double> eta;              // per block, as estimated
  std::vector<double> delta;            // per block scale
  std::vector<std::size_t> singleton_blocks;  // eta fixed to 1 by convention
  // Set when some block is not a power of its utility sum.
  std::optional<std::size_t> failed_block;
  Menu witness;
  double worst_log_error = 0.0;
};

// Fits v(A) = delta_i * sum(u, A)^eta_i per block using the block's first
// member as anchor, then checks every subset. On success returns the nested
// logit with utilities delta_i^(1/eta_i) * u on block i.
inline EtaRecovery recover_eta(const NscModel& m, double tol = kDefaultTolerance) {
  m.validate();
  EtaRecovery r;
  const std::size_t K = m.structure.size();
  r.eta.assign(K, 1.0);
  r.delta.assign(K, 1.0);
  std::vector<double> ubar = m.u;
  if (K == 1) {
    // One nest: v never enters the choice probabilities.
    r.model = NestedLogitModel{m.universe, m.structure, m.u, {1.0}};
    return r;
  }
  for (std::size_t k = 0; k < K; ++k) {
    const Menu block = m.structure.block(k);
    const std::size_t anchor = block.lowest();
    const double ua = m.u[anchor], va = m.v(k, Menu::single(anchor));
    if (block.size() == 1) {
      r.singleton_blocks.push_back(k);
      r.eta[k] = 1.0;
    } else {
      r.eta[k] = std::log(m.v(k, block) / va) / std::log(detail::sum_over(m.u, block) / ua);
    }
    r.delta[k] = va / std::pow(ua, r.eta[k]);
    const double logd = std::log(r.delta[k]);
    for_each_subset(block, [&](Menu s) {
      const double e = std::abs(std::log(m.v(k, s)) - logd - r.eta[k] * std::log(detail::sum_over(m.u, s)));
      if (e > r.worst_log_error) {
        r.worst_log_error = e;
        if (e > tol) {
          r.failed_block = k;
          r.witness = s;
        }
      }
    });
    if (!(r.eta[k] > 0.0) || !std::isfinite(r.eta[k])) {
      r.failed_block = k;
      r.witness = block;
    }
    const double scale = std::pow(r.delta[k], 1.0 / r.eta[k]);
    for (std::size_t a : block) ubar[a] = m.u[a] * scale;
  }
  if (!r.failed_block) r.model = NestedLogitModel{m.universe, m.structure, ubar, r.eta};
  return r;
}

struct ThreeStepRecovery {
  ThreeStepModel model;
  std::vector<std::string> flags;
};

// Outer blocks are the classes of ~ ∪ bowtie, inner blocks the classes of ~.
// Inside each outer block u and v come from the NSC construction on that
// block's menus; w comes from the same construction applied to outer blocks.
inline ThreeStepRecovery recover_three_step(const ChoiceTable& t, double tol = kDefaultTolerance) {
  t.require_complete();
  const Universe& U = t.universe();
  const auto sim = revealed_similarity(t, tol);
  const auto gisa = check_gisa(t, tol);
  if (!gisa.passed)
    throw Error("gisa-violated", "table violates generalized independence of symmetric alternatives",
                detail::witness_json(U, gisa.witnesses.front()));
  const auto cons = check_consistency(t, tol);
  if (!cons.passed)
    throw Error("consistency-violated", "revealed similarities are inconsistent",
                detail::witness_json(U, cons.witnesses.front()));
  const auto approx = approx_revealed_similarity(t, sim, tol);
  if (!approx.combined.transitive())
    throw Error("consistency-violated", "combined similarity relation is not transitive");

  ThreeStepRecovery out;
  auto& m = out.model;
  m.universe = U;
  m.inner = sim.classes();
  m.outer = approx.combined.classes();
  m.u.assign(U.size(), 0.0);
  m.v = BlockValues(m.inner);
  m.w = BlockValues(m.outer);
  detail::fill_utilities(t, m.inner.blocks(), m.u);
  for (std::size_t k = 0; k < m.outer.size(); ++k) {
    std::vector<std::size_t> ids;
    for (std::size_t l = 0; l < m.inner.size(); ++l)
      if (m.inner.block(l).subset_of(m.outer.block(k))) ids.push_back(l);
    detail::fill_block_values(t, ids, m.v);
  }
  std::vector<std::size_t> outer_ids(m.outer.size());
  for (std::size_t k = 0; k < outer_ids.size(); ++k) outer_ids[k] = k;
  detail::fill_block_values(t, outer_ids, m.w);
  if (m.outer.size() == 1) out.flags.push_back("single-outer-block");
  if (m.outer.size() < 3) out.flags.push_back("fewer-than-three-outer-blocks");
  if (!approx.vacuous.empty()) out.flags.push_back("vacuous-approximate-similarity");
  const double err = detail::max_log_error(full_choice_table(m, 20), t);
  if (err > tol) {
    if (m.outer.size() < 3)
      throw Error("too-few-outer-blocks", "recovered 3-step model does not reproduce the table");
    throw Error("round-trip-failed", "recovered 3-step model does not reproduce the table");
  }
  return out;
}

}  // namespace nsc
