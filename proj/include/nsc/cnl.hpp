// Constructive cross-nested logit representation of an arbitrary positive
// choice table: one nest per menu, utilities found as a fixed point of the
// sigma map, then converted to allocation weights.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nsc/choice_table.hpp"
#include "nsc/models.hpp"

namespace nsc {

namespace detail {

inline double logsumexp(const std::vector<double>& xs) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : xs) top = std::max(top, x);
  if (!std::isfinite(top)) return top;
  double z = 0.0;
  for (double x : xs) z += std::exp(x - top);
  return top + std::log(z);
}

}  // namespace detail

// Generalized nested logit. Weights are kept as logs: with lambda in the tens
// of thousands, alpha itself underflows.
struct CnlModel {
  Universe universe;
  std::vector<Menu> nests;
  std::vector<std::vector<double>> log_alpha;  // per nest, aligned with nest members
  std::vector<double> log_u;
  std::vector<double> lambda;  // per nest
  double residual = 0.0;

  bool cross_nested() const {
    return std::all_of(lambda.begin(), lambda.end(), [&](double l) { return l == lambda.front(); });
  }
  std::vector<double> u() const {
    std::vector<double> out;
    for (double l : log_u) out.push_back(std::exp(l));
    return out;
  }
  double alpha(std::size_t k, std::size_t x) const {
    const Menu n = nests.at(k);
    if (!n.contains(x)) return 0.0;
    return std::exp(log_alpha[k][static_cast<std::size_t>(detail::position_in(x, n))]);
  }

  void validate() const {
    if (nests.size() != log_alpha.size() || nests.size() != lambda.size() || log_u.size() != universe.size())
      throw Error("invalid-model", "cross-nested model has inconsistent dimensions");
    for (std::size_t x = 0; x < universe.size(); ++x) {
      std::vector<double> ls;
      for (std::size_t k = 0; k < nests.size(); ++k)
        if (nests[k].contains(x)) ls.push_back(log_alpha[k][static_cast<std::size_t>(detail::position_in(x, nests[k]))]);
      if (ls.empty()) throw Error("invalid-model", "alternative belongs to no nest");
      if (std::abs(detail::logsumexp(ls)) > 1e-9) throw Error("invalid-model", "allocation weights must sum to 1");
    }
  }

  std::vector<double> row(Menu menu) const {
    detail::require_menu(menu, universe.size());
    std::vector<double> out(menu.size(), 0.0);
    std::vector<std::vector<double>> t(nests.size());
    std::vector<double> inner(nests.size(), -std::numeric_limits<double>::infinity()), weight;
    std::vector<std::size_t> used;
    for (std::size_t k = 0; k < nests.size(); ++k) {
      const Menu part = menu & nests[k];
      if (part.empty()) continue;
      for (std::size_t y : part)
        t[k].push_back((log_alpha[k][static_cast<std::size_t>(detail::position_in(y, nests[k]))] + log_u[y]) /
                       lambda[k]);
      inner[k] = detail::logsumexp(t[k]);
      weight.push_back(lambda[k] * inner[k]);
      used.push_back(k);
    }
    const double denom = detail::logsumexp(weight);
    for (std::size_t k : used) {
      const Menu part = menu & nests[k];
      std::size_t j = 0;
      for (std::size_t y : part) {
        out[static_cast<std::size_t>(detail::position_in(y, menu))] +=
            std::exp(t[k][j++] - inner[k] + lambda[k] * inner[k] - denom);
      }
    }
    return out;
  }
};

inline double gnl_prob(const CnlModel& m, std::size_t x, Menu menu) {
  detail::require_member(x, menu);
  return m.row(menu)[static_cast<std::size_t>(detail::position_in(x, menu))];
}

// u^A_x for every menu A and member x, stored flat in menu bitmask order.
class MenuUtilities {
 public:
  MenuUtilities() = default;
  explicit MenuUtilities(std::size_t n) : n_(n), offset_(std::size_t{1} << n, 0) {
    std::size_t off = 0;
    for (std::uint64_t m = 1; m < (std::uint64_t{1} << n); ++m) {
      offset_[m] = off;
      off += Menu(m).size();
    }
    values_.assign(off, 0.0);
  }
  std::size_t n() const { return n_; }
  std::size_t dimension() const { return values_.size(); }
  double& at(Menu A, std::size_t x) { return values_[offset_[A.bits()] + static_cast<std::size_t>(detail::position_in(x, A))]; }
  double at(Menu A, std::size_t x) const {
    return values_[offset_[A.bits()] + static_cast<std::size_t>(detail::position_in(x, A))];
  }
  double* row(Menu A) { return values_.data() + offset_[A.bits()]; }
  const double* row(Menu A) const { return values_.data() + offset_[A.bits()]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offset_;
  std::vector<double> values_;
};

struct SolverConfig {
  double p_star = 0.0;
  double lambda_star = 0.0;
  double lambda = 0.0;
  std::vector<double> m;  // indexed by menu bitmask
  std::size_t max_iters = 5000;
  double residual_tol = 1e-12;
  double damping = 0.5;
  bool check_invariants = true;
};

struct SolverOverrides {
  double lambda_factor = 1.01;  // lambda = factor * lambda_star, factor > 1
  std::size_t max_iters = 5000;
  double residual_tol = 1e-12;
  double damping = 0.5;
  std::size_t max_universe = 6;
  bool check_invariants = true;
  bool force_fallback = false;  // skip plain iteration (testing aid)
};

// p* = min(min p, 1/|X|); lambda* from the self-map bound; m^A = 1 + |A| p*/|X|^2.
inline SolverConfig make_solver_config(const ChoiceTable& t, const SolverOverrides& o = {}) {
  t.require_complete();
  if (!(o.lambda_factor > 1.0)) throw Error("invalid-config", "lambda must strictly exceed lambda*");
  if (!(o.damping > 0.0 && o.damping <= 1.0)) throw Error("invalid-config", "damping must lie in (0, 1]");
  const std::size_t n = t.universe().size();
  const double nn = static_cast<double>(n);
  SolverConfig c;
  c.p_star = std::min(t.min_prob(), 1.0 / nn);
  c.m.assign(std::size_t{1} << n, 0.0);
  const double num = std::log(std::pow(2.0, nn + 2.0) / c.p_star);
  for (std::uint64_t A = 1; A < (std::uint64_t{1} << n); ++A) {
    const double k = static_cast<double>(Menu(A).size());
    c.m[A] = 1.0 + k * c.p_star / (nn * nn);
    const double den = std::log1p(k * c.p_star / (nn * nn)) - std::log1p((k - 1.0) * c.p_star / (nn * nn));
    c.lambda_star = std::max(c.lambda_star, num / den);
  }
  c.lambda = o.lambda_factor * c.lambda_star;
  c.max_iters = o.max_iters;
  c.residual_tol = o.residual_tol;
  c.damping = o.damping;
  c.check_invariants = o.check_invariants;
  return c;
}

struct SigmaResult {
  MenuUtilities sigma;
  std::vector<double> f;  // f^A indexed by menu bitmask
};

// sigma^A_x = m^A (p(x,A) - g^A_x) / f^A, all powers taken in log space.
inline SigmaResult sigma_map(const MenuUtilities& U, const ChoiceTable& t, const SolverConfig& cfg) {
  const std::size_t n = U.n();
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  SigmaResult r{MenuUtilities(n), std::vector<double>(full + 1, 0.0)};
  for (double v : U.values())
    if (!(v > 0.0)) throw Error("nonpositive-utility", "menu utilities must be positive");
  std::vector<double> logS(full + 1), logw;
  for (std::uint64_t a = 1; a <= full; ++a) {
    const Menu A(a);
    // log S_C(A) and log of S_C(A)^lambda for every nest C meeting A.
    logw.clear();
    for (std::uint64_t c = 1; c <= full; ++c) {
      const Menu C(c), AC = A & C;
      if (AC.empty()) continue;
      const double* uc = U.row(C);
      double s = 0.0;
      std::size_t k = 0;
      for (std::size_t i : C) {
        if (AC.contains(i)) s += uc[k];
        ++k;
      }
      logS[c] = std::log(s);
      logw.push_back(cfg.lambda * logS[c]);
    }
    const double logD = detail::logsumexp(logw);
    const double f = std::exp(cfg.lambda * logS[a] - logD);
    r.f[a] = f;
    auto prow = t.row(A);
    double* out = r.sigma.row(A);
    std::size_t pos = 0;
    for (std::size_t x : A) {
      double g = 0.0;
      for (std::uint64_t b = 1; b <= full; ++b) {
        const Menu B(b);
        if (b == a || !B.contains(x)) continue;
        g += U.at(B, x) * std::exp(cfg.lambda * logS[b] - logD - logS[b]);
      }
      out[pos] = cfg.m[a] * (prow[pos] - g) / f;
      if (!(out[pos] > 0.0))
        throw Error("nonpositive-sigma", "sigma map left the positive orthant at menu " + t.universe().label(A));
      ++pos;
    }
  }
  return r;
}

struct CnlDiagnostics {
  std::vector<double> residual_trace;
  std::size_t iterations = 0;
  bool converged = false;
  bool used_fallback = false;
  std::size_t invariant_violations = 0;
  std::string first_violation;
  double p_star = 0.0;
  double lambda_star = 0.0;
  double lambda = 0.0;
  double max_reproduction_error = 0.0;
};

struct CnlSolution {
  CnlModel model;
  CnlDiagnostics diagnostics;
  MenuUtilities utilities;  // the fixed point before conversion
};

namespace detail {

// Records any broken bracket: f^A in (1 - p*/2, 1], sigma rows summing to m^A,
// sigma > m^A p*/2, and membership of U in S.
inline void audit(const MenuUtilities& U, const SigmaResult& s, const SolverConfig& cfg, CnlDiagnostics& d) {
  const std::size_t n = U.n();
  auto note = [&](const std::string& what) {
    if (d.invariant_violations++ == 0) d.first_violation = what;
  };
  for (std::uint64_t a = 1; a < (std::uint64_t{1} << n); ++a) {
    const Menu A(a);
    const double m = cfg.m[a];
    // f < 1 holds exactly but rounds to 1 once the rival nests underflow.
    if (!(s.f[a] > 1.0 - cfg.p_star / 2.0 && s.f[a] <= 1.0)) note("f bracket at menu " + std::to_string(a));
    double rs = 0.0, us = 0.0, umin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < A.size(); ++k) {
      const double sg = s.sigma.row(A)[k];
      rs += sg;
      if (!(sg > m * cfg.p_star / 2.0)) note("sigma lower bound at menu " + std::to_string(a));
      us += U.row(A)[k];
      umin = std::min(umin, U.row(A)[k]);
    }
    if (std::abs(rs - m) > 1e-12 * m) note("sigma row sum at menu " + std::to_string(a));
    if (std::abs(us - m) > 1e-12 * m) note("S row sum at menu " + std::to_string(a));
    if (A.size() > 1 && m - umin > 1.0 - cfg.p_star * cfg.p_star / 4.0 + 1e-12)
      note("S subset bound at menu " + std::to_string(a));
  }
}

inline double residual(const MenuUtilities& U, const MenuUtilities& S) {
  double r = 0.0;
  for (std::size_t k = 0; k < U.dimension(); ++k) r = std::max(r, std::abs(S.values()[k] - U.values()[k]));
  return r;
}

inline bool in_s(const MenuUtilities& U, const SolverConfig& cfg) {
  for (std::uint64_t a = 1; a < (std::uint64_t{1} << U.n()); ++a) {
    const Menu A(a);
    double us = 0.0, umin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < A.size(); ++k) {
      const double v = U.row(A)[k];
      if (!(v > 0.0)) return false;
      us += v;
      umin = std::min(umin, v);
    }
    if (std::abs(us - cfg.m[a]) > 1e-10 * cfg.m[a]) return false;
    if (A.size() > 1 && cfg.m[a] - umin > 1.0 - cfg.p_star * cfg.p_star / 4.0) return false;
  }
  return true;
}

// Gauss-Newton on F(U) = sigma(U) - U with a finite-difference Jacobian and a
// backtracking line search on |F|^2. Steps are projected onto the row-sum
// constraints; steps leaving S are shortened.
inline bool newton_polish(MenuUtilities& U, const ChoiceTable& t, const SolverConfig& cfg, CnlDiagnostics& d) {
  const std::size_t N = U.dimension();
  auto F = [&](const MenuUtilities& X, Eigen::VectorXd& out) {
    auto s = sigma_map(X, t, cfg);
    out.resize(static_cast<Eigen::Index>(N));
    for (std::size_t k = 0; k < N; ++k) out[static_cast<Eigen::Index>(k)] = s.sigma.values()[k] - X.values()[k];
  };
  Eigen::VectorXd f0, f1;
  for (std::size_t it = 0; it < 50; ++it) {
    F(U, f0);
    const double r0 = f0.lpNorm<Eigen::Infinity>();
    d.residual_trace.push_back(r0);
    if (r0 < cfg.residual_tol) return true;
    Eigen::MatrixXd J(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    for (std::size_t k = 0; k < N; ++k) {
      MenuUtilities V = U;
      const double h = 1e-7 * std::max(1e-3, V.values()[k]);
      V.values()[k] += h;
      F(V, f1);
      J.col(static_cast<Eigen::Index>(k)) = (f1 - f0) / h;
    }
    Eigen::VectorXd step = J.colPivHouseholderQr().solve(-f0);
    // Keep every menu's row sum fixed so trial points can stay in S.
    for (std::uint64_t a = 1; a < (std::uint64_t{1} << U.n()); ++a) {
      const Menu A(a);
      const auto off = static_cast<Eigen::Index>(U.row(A) - U.values().data());
      const auto len = static_cast<Eigen::Index>(A.size());
      step.segment(off, len).array() -= step.segment(off, len).mean();
    }
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
      MenuUtilities V = U;
      for (std::size_t k = 0; k < N; ++k) V.values()[k] += alpha * step[static_cast<Eigen::Index>(k)];
      if (!in_s(V, cfg)) continue;
      try {
        F(V, f1);
      } catch (const Error&) {
        continue;
      }
      if (f1.squaredNorm() < f0.squaredNorm()) {
        U = std::move(V);
        moved = true;
        break;
      }
    }
    if (!moved) return false;
  }
  F(U, f0);
  return f0.lpNorm<Eigen::Infinity>() < cfg.residual_tol;
}

}  // namespace detail

// Damped fixed-point iteration from the interior point u^A_x = 1/|A| + p*/|X|^2,
// with a Newton fallback, followed by the conversion
//   log u(x) = logsumexp_A(lambda log u^A_x),  log alpha^A_x = lambda log u^A_x - log u(x).
inline CnlSolution solve_cnl(const ChoiceTable& t, const SolverOverrides& o = {}) {
  t.require_complete();
  const std::size_t n = t.universe().size();
  if (n > o.max_universe) throw Error("universe-too-large", "cross-nested solve is capped by max_universe");
  if (!(t.min_prob() > 0.0)) throw Error("table-not-positive", "table must be strictly positive");
  const SolverConfig cfg = make_solver_config(t, o);
  CnlSolution sol;
  auto& d = sol.diagnostics;
  d.p_star = cfg.p_star;
  d.lambda_star = cfg.lambda_star;
  d.lambda = cfg.lambda;
  const double nn = static_cast<double>(n);

  MenuUtilities U(n);
  for (std::uint64_t a = 1; a < (std::uint64_t{1} << n); ++a) {
    const Menu A(a);
    for (std::size_t k = 0; k < A.size(); ++k) U.row(A)[k] = 1.0 / static_cast<double>(A.size()) + cfg.p_star / (nn * nn);
  }

  if (!o.force_fallback) {
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
      auto s = sigma_map(U, t, cfg);
      if (cfg.check_invariants) detail::audit(U, s, cfg, d);
      const double r = detail::residual(U, s.sigma);
      d.residual_trace.push_back(r);
      d.iterations = it + 1;
      if (r < cfg.residual_tol) {
        d.converged = true;
        break;
      }
      for (std::size_t k = 0; k < U.dimension(); ++k)
        U.values()[k] = (1.0 - cfg.damping) * U.values()[k] + cfg.damping * s.sigma.values()[k];
    }
  }
  if (!d.converged) {
    d.used_fallback = true;
    d.converged = detail::newton_polish(U, t, cfg, d);
    if (cfg.check_invariants) detail::audit(U, sigma_map(U, t, cfg), cfg, d);
  }
  if (!d.converged)
    throw Error("no-convergence", "cross-nested fixed point not found",
                "{\"last_residual\":" + std::to_string(d.residual_trace.empty() ? -1.0 : d.residual_trace.back()) +
                    "}");

  sol.utilities = U;
  CnlModel& m = sol.model;
  m.universe = t.universe();
  m.log_u.assign(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<double> ls;
    for (std::uint64_t a = 1; a < (std::uint64_t{1} << n); ++a)
      if (Menu(a).contains(x)) ls.push_back(cfg.lambda * std::log(U.at(Menu(a), x)));
    m.log_u[x] = detail::logsumexp(ls);
  }
  for (std::uint64_t a = 1; a < (std::uint64_t{1} << n); ++a) {
    const Menu A(a);
    m.nests.push_back(A);
    m.lambda.push_back(cfg.lambda);
    std::vector<double> la;
    for (std::size_t x : A) la.push_back(cfg.lambda * std::log(U.at(A, x)) - m.log_u[x]);
    m.log_alpha.push_back(std::move(la));
  }
  m.residual = d.residual_trace.back();
  for_each_subset(t.universe().all(), [&](Menu A) {
    auto q = m.row(A);
    auto p = t.row(A);
    for (std::size_t k = 0; k < q.size(); ++k) d.max_reproduction_error = std::max(d.max_reproduction_error, std::abs(q[k] - p[k]));
  });
  const double bound = std::max(10.0 * cfg.residual_tol, 1e-9);
  if (d.max_reproduction_error > bound)
    throw Error("no-convergence", "cross-nested representation does not reproduce the table");
  return sol;
}

}  // namespace nsc
