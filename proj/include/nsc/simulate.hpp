// Random NSC models, the uniform perturbation protocol, multinomial sampling
// and the identification-rate experiment.
#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "nsc/choice_table.hpp"
#include "nsc/dataset.hpp"
#include "nsc/identification.hpp"
#include "nsc/models.hpp"
#include "nsc/similarity.hpp"

namespace nsc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for a (seed, key...) tuple; the order keys are consumed
// in is irrelevant to anything but the stream identity.
inline Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return Rng(h);
}

enum class SamplingMode { perturbation, multinomial };

struct SimConfig {
  NestStructure structure = NestStructure::from_labels({0, 0, 0, 1, 1, 1});
  double u_low = 0.5, u_high = 2.0;
  double v_low = 0.5, v_high = 2.0;
  SamplingMode mode = SamplingMode::perturbation;
  double per_menu = 1000;  // N_A in multinomial mode
  std::size_t trials = 400;
  std::uint64_t seed = 7;
  bool reduced_search = false;
  bool smoothing = false;  // only meaningful in multinomial mode
  std::size_t threads = 1;
  std::size_t rejection_budget = 1000;
  double tol = kDefaultTolerance;

  void validate() const {
    if (!(u_low > 0.0 && u_high >= u_low && v_low > 0.0 && v_high >= v_low))
      throw Error("invalid-config", "u and v ranges must be positive intervals");
    if (trials < 1) throw Error("invalid-config", "at least one trial is required");
    if (mode == SamplingMode::multinomial && !(per_menu >= 1.0))
      throw Error("invalid-config", "multinomial mode needs at least one draw per menu");
  }
};

struct RandomModel {
  NscModel model;
  std::size_t rejections = 0;
  std::vector<std::string> flags;
};

// Draws u and v uniformly and redraws until the model is nondegenerate and
// separates every pair of blocks. All-singleton structures are Luce models
// and skip both checks.
inline RandomModel random_nsc(const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto& s = cfg.structure;
  const std::size_t n = s.universe_size();
  std::size_t singles = 0;
  for (Menu b : s.blocks()) singles += b.size() == 1;
  const bool luce = singles == s.size();
  if (!luce && singles >= 2)
    throw Error("unidentifiable-structure", "two singleton blocks next to a larger block are never nondegenerate");
  std::uniform_real_distribution<double> du(cfg.u_low, cfg.u_high), dv(cfg.v_low, cfg.v_high);
  RandomModel out{NscModel{Universe::indexed(n), s, {}, BlockValues(s)}, 0, {}};
  if (luce) out.flags.push_back("all-singleton-luce");
  for (std::size_t draw = 0; draw < cfg.rejection_budget; ++draw) {
    auto& m = out.model;
    m.u.assign(n, 0.0);
    for (auto& x : m.u) x = du(rng);
    for (std::size_t k = 0; k < s.size(); ++k) for_each_subset(s.block(k), [&](Menu sub) { m.v.set(k, sub, dv(rng)); });
    if (luce) return out;
    bool ok = !is_degenerate(m, cfg.tol).degenerate;
    if (ok && n <= 10) ok = check_assumption1(m, cfg.tol).passed;
    if (ok) {
      if (n > 10) out.flags.push_back("assumption1-unchecked");
      return out;
    }
    ++out.rejections;
  }
  throw Error("rejection-budget-exhausted", "no acceptable model within the rejection budget");
}

// p'(a, A) = (p(a, A) + z_a) / sum_b (p(b, A) + z_b), z i.i.d. uniform on [0, delta].
inline ChoiceTable perturb_table(const ChoiceTable& t, double delta, Rng& rng) {
  if (!(delta >= 0.0)) throw Error("invalid-config", "noise level must be nonnegative");
  if (delta == 0.0) return t;
  std::uniform_real_distribution<double> dz(0.0, delta);
  ChoiceTable out(t.universe());
  for (Menu m : t.menus()) {
    auto r = t.row(m);
    std::vector<double> p(r.begin(), r.end());
    double s = 0.0;
    for (double& x : p) s += (x += dz(rng));
    for (double& x : p) x /= s;
    out.set(m, std::move(p));
  }
  return out;
}

// Multinomial draws per menu via sequential conditional binomials.
inline Dataset sample_dataset(const ChoiceTable& t, std::uint64_t per_menu, Rng& rng) {
  if (per_menu < 1) throw Error("invalid-config", "at least one draw per menu is required");
  Dataset d(t.universe());
  std::size_t k = 0;
  for (Menu m : t.menus()) {
    auto r = t.row(m);
    std::vector<double> c(r.size(), 0.0);
    std::uint64_t left = per_menu;
    double mass = 1.0;
    for (std::size_t i = 0; i + 1 < r.size() && left > 0; ++i) {
      const double q = std::clamp(r[i] / mass, 0.0, 1.0);
      const auto x = std::binomial_distribution<std::uint64_t>(left, q)(rng);
      c[i] = static_cast<double>(x);
      left -= x;
      mass -= r[i];
    }
    c.back() += static_cast<double>(left);
    d.add("m" + std::to_string(++k), m, std::move(c));
  }
  return d;
}

struct Interval {
  double low = 0.0, high = 1.0;
};

// Wilson score interval at 95%.
inline Interval wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) return {};
  const double z = 1.959963984540054, n = static_cast<double>(trials), ph = static_cast<double>(successes) / n;
  const double den = 1.0 + z * z / n, mid = (ph + z * z / (2.0 * n)) / den;
  const double half = z * std::sqrt(ph * (1.0 - ph) / n + z * z / (4.0 * n * n)) / den;
  return {std::max(0.0, mid - half), std::min(1.0, mid + half)};
}

struct RateRow {
  double delta = 0.0;
  std::size_t trials = 0, correct = 0;
  double rate = 0.0;
  Interval ci;
  std::size_t rejections = 0;
};

// One trial: model from stream (seed, trial), noise from (seed, trial, delta index).
// Sharing the model across noise levels keeps the rates comparable.
inline bool run_trial(const SimConfig& cfg, std::size_t trial, std::size_t level, double delta, std::size_t* rejections) {
  Rng mrng = stream(cfg.seed, {trial});
  const auto rm = random_nsc(cfg, mrng);
  if (rejections) *rejections = rm.rejections;
  const ChoiceTable exact = full_choice_table(rm.model);
  Rng nrng = stream(cfg.seed, {trial, level + 1});
  Dataset data;
  if (cfg.mode == SamplingMode::perturbation)
    data = Dataset::from_table(perturb_table(exact, delta, nrng));
  else
    data = sample_dataset(perturb_table(exact, delta, nrng), static_cast<std::uint64_t>(cfg.per_menu), nrng);
  IdentifyOptions opt;
  opt.smoothing = cfg.smoothing;
  opt.top_k = 1;
  const auto res = cfg.reduced_search ? identify_reduced(data, opt) : identify_full(data, opt);
  return res.best == cfg.structure;
}

inline std::vector<RateRow> replicate_figure(const std::vector<double>& deltas, const SimConfig& cfg) {
  cfg.validate();
  std::vector<RateRow> rows;
  const std::size_t T = std::max<std::size_t>(1, cfg.threads);
  for (std::size_t level = 0; level < deltas.size(); ++level) {
    std::vector<char> hit(cfg.trials, 0);
    std::vector<std::size_t> rej(cfg.trials, 0);
    std::vector<std::exception_ptr> errors(T);
    auto work = [&](std::size_t tid) {
      try {
        for (std::size_t t = tid; t < cfg.trials; t += T) hit[t] = run_trial(cfg, t, level, deltas[level], &rej[t]);
      } catch (...) {
        errors[tid] = std::current_exception();
      }
    };
    if (T == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t k = 0; k < T; ++k) pool.emplace_back(work, k);
      for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    RateRow r;
    r.delta = deltas[level];
    r.trials = cfg.trials;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      r.correct += static_cast<std::size_t>(hit[t]);
      r.rejections += rej[t];
    }
    r.rate = static_cast<double>(r.correct) / static_cast<double>(r.trials);
    r.ci = wilson_interval(r.correct, r.trials);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace nsc
