// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <thread>

#include "nsc/axioms.hpp"
#include "nsc/cnl.hpp"
#include "nsc/identification.hpp"
#include "nsc/recovery.hpp"
#include "nsc/simulate.hpp"
#include "support.hpp"

using namespace nsc;
namespace ts = testing_support;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::size_t threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Criterion 2 and 4 share these models.
struct ExactCase {
  NestStructure truth;
  Dataset data;
};

std::vector<ExactCase> exact_cases() {
  std::vector<ExactCase> out;
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 5 + static_cast<std::size_t>(i % 3), k = 2 + static_cast<std::size_t>((i / 3) % 2);
    const auto s = ts::random_structure(n, k, rng);
    out.push_back({s, Dataset::from_table(full_choice_table(ts::random_nsc(s, 5000 + static_cast<std::uint64_t>(i))))});
  }
  return out;
}

void criterion1() {
  const std::vector<double> deltas{0.0, 0.01, 0.025, 0.035, 0.05, 0.075};
  SimConfig cfg;
  cfg.trials = 400;
  cfg.seed = 20240601;
  cfg.threads = threads();
  const auto rows = replicate_figure(deltas, cfg);
  bool ok = true;
  std::string detail = "[0.5,2]";
  for (const auto& r : rows) {
    detail += fmt(" d=%g:%.0f/400", r.delta, static_cast<double>(r.correct));
    if (r.delta <= 0.035) ok = ok && r.rate >= 0.995;
  }
  ok = ok && std::abs(rows[4].rate - 0.9875) <= 0.03 && std::abs(rows[5].rate - 0.9775) <= 0.03;
  SimConfig wide = cfg;
  wide.u_low = wide.v_low = 0.1;
  wide.u_high = wide.v_high = 5.0;
  const auto wrows = replicate_figure({0.0, 0.01, 0.025, 0.035}, wide);
  detail += "; [0.1,5]";
  for (const auto& r : wrows) {
    detail += fmt(" d=%g:%.0f/400", r.delta, static_cast<double>(r.correct));
    ok = ok && r.rate >= 0.95;
  }
  report(1, ok, "figure replication " + detail);
}

void criterion2(const std::vector<ExactCase>& cases) {
  std::size_t good = 0;
  double worst_zero = 0, best_other = 1e300;
  for (const auto& c : cases) {
    IdentifyOptions opt;
    opt.threads = threads();
    const auto r = identify_full(c.data, opt);
    const double zero = r.ranked[0].loss.total, other = r.ranked[1].loss.total;
    worst_zero = std::max(worst_zero, zero);
    best_other = std::min(best_other, other);
    good += r.best == c.truth && zero < 1e-18 && other > 1e-12;
  }
  report(2, good == cases.size(),
         fmt("exact-data identification %.0f/100, max true D %.3g, min other D %.3g", static_cast<double>(good),
             worst_zero, best_other));
}

void criterion3() {
  std::mt19937_64 rng(77);
  std::size_t good = 0;
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 3 + static_cast<std::size_t>(i % 6);
    const std::size_t k = std::min<std::size_t>((n + 1) / 2, 2 + static_cast<std::size_t>(i % 2));
    const auto s = ts::random_structure(n, k, rng);
    const auto truth = ts::random_nsc(s, 9000 + static_cast<std::uint64_t>(i));
    const auto t = full_choice_table(truth);
    try {
      const auto m = recover_nsc(t);
      const double err = max_abs_difference(full_choice_table(m), t);
      worst = std::max(worst, err);
      good += m.structure == truth.structure && err < 1e-10;
    } catch (const Error&) {
    }
  }
  std::size_t eta_good = 0;
  double eta_worst = 0;
  std::uniform_real_distribution<double> lo(0.2, 0.8), hi(1.2, 2.0);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 4 + static_cast<std::size_t>(i % 5);
    const std::size_t k = std::min<std::size_t>((n + 1) / 2, 2 + static_cast<std::size_t>(i % 2));
    const auto s = ts::random_structure(n, k, rng);
    std::vector<double> eta;
    for (std::size_t b = 0; b < k; ++b) eta.push_back(b % 2 ? hi(rng) : lo(rng));
    const auto nl = ts::random_nested_logit(s, eta, 11000 + static_cast<std::uint64_t>(i));
    try {
      const auto r = recover_eta(recover_nsc(full_choice_table(nl)));
      if (!r.model) continue;
      // Recovered blocks follow canonical order; match them back by the lowest member.
      bool ok = true;
      for (std::size_t b = 0; b < s.size(); ++b) {
        if (s.block(b).size() == 1) continue;
        const std::size_t rb = r.model->structure.block_of(s.block(b).lowest());
        const double e = std::abs(r.eta[rb] - eta[b]);
        eta_worst = std::max(eta_worst, e);
        ok = ok && e < 1e-9;
      }
      eta_good += ok;
    } catch (const Error&) {
    }
  }
  report(3, good == 100 && eta_good == 100,
         fmt("round trips %.0f/100 (max err %.3g)", static_cast<double>(good), worst) +
             fmt(", eta recovery %.0f/100 (max err %.3g)", static_cast<double>(eta_good), eta_worst));
}

void criterion4(const std::vector<ExactCase>& cases) {
  std::size_t same = 0, small = 0;
  for (const auto& c : cases) {
    same += identify_reduced(c.data).best == identify_full(c.data).best;
    small += candidate_partitions(distance_matrix(c.data)).partitions.size() <= c.truth.universe_size();
  }
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::size_t random_small = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(i % 9);
    DistanceMatrix m{Universe::indexed(n), std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)),
                     std::vector<std::vector<double>>(n, std::vector<double>(n, 1.0))};
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) m.d[a][b] = m.d[b][a] = i % 4 == 0 ? std::floor(d(rng) * 3) : d(rng);
    random_small += candidate_partitions(m).partitions.size() <= n;
  }
  report(4, same == cases.size() && small == cases.size() && random_small == 1000,
         fmt("reduced = full %.0f/100, candidates <= |X| %.0f/100", static_cast<double>(same), static_cast<double>(small)) +
             fmt(" and %.0f/1000 random matrices", static_cast<double>(random_small)));
}

void criterion5() {
  std::size_t iia = 0, reg = 0, isa = 0, nsc_tables = 0;
  for (int i = 0; i < 200; ++i) {
    ChoiceTable t;
    const bool from_nsc = i % 2 == 0;
    if (from_nsc) {
      t = full_choice_table(ts::random_nsc(i % 4 == 0 ? ts::sizes({2, 2, 1}) : ts::sizes({2, 2}), 300 + static_cast<std::uint64_t>(i)));
      ++nsc_tables;
      isa += check_isa(t).passed;
    } else {
      t = ts::random_table(4, 300 + static_cast<std::uint64_t>(i));
    }
    iia += check_iia(t).passed == (check_isa(t).passed && check_iaa(t).passed);
    reg += check_regularity(t).passed == (check_similar_regularity(t).passed && check_dissimilar_regularity(t).passed);
  }
  std::size_t nl_ok = 0, ru_ok = 0;
  std::uniform_real_distribution<double> any(0.2, 2.0), ru(0.1, 1.0);
  std::mt19937_64 rng(55);
  for (int i = 0; i < 20; ++i) {
    const auto t = full_choice_table(ts::random_nested_logit(ts::sizes({3, 2}), {any(rng), any(rng)}, 600 + static_cast<std::uint64_t>(i)));
    nl_ok += check_lri(t).passed && check_rli(t).passed;
    const auto r = full_choice_table(ts::random_nested_logit(ts::sizes({3, 2}), {ru(rng), ru(rng)}, 700 + static_cast<std::uint64_t>(i)));
    ru_ok += check_regularity(r).passed;
  }
  const auto s = ts::sizes({3, 2});
  const std::vector<double> u{1, 2, 3, 0.5, 1.5};
  const NscModel lin{Universe::indexed(5), s, u, make_preset_v(LinearPreset{{1, 1}, {5, 5}}, s, u)};
  const bool lin_fails = !check_lri(full_choice_table(lin)).passed;
  const NestedLogitModel three{Universe::indexed(4), ts::sizes({2, 2}), {1, 1, 1, 1}, {3, 3}};
  const bool three_fails = !check_regularity(full_choice_table(three)).passed;
  const bool ok = iia == 200 && reg == 200 && isa == nsc_tables && nl_ok == 20 && ru_ok == 20 && lin_fails && three_fails;
  report(5, ok,
         fmt("iia identity %.0f/200, regularity identity %.0f/200, NSC pass isa %.0f/100", static_cast<double>(iia),
             static_cast<double>(reg), static_cast<double>(isa)) +
             fmt(", NL lri+rli %.0f/20, RU NL regular %.0f/20", static_cast<double>(nl_ok), static_cast<double>(ru_ok)) +
             ", linear preset fails lri: " + (lin_fails ? "yes" : "no") + ", eta=3 fails regularity: " +
             (three_fails ? "yes" : "no"));
}

void criterion6() {
  std::size_t premise = 0, counter = 0;
  std::uniform_real_distribution<double> ru(0.1, 0.95);
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    std::mt19937_64 rng(seed);
    ChoiceTable t;
    if (seed % 2)
      t = full_choice_table(ts::random_nested_logit(ts::sizes({3, 2}), {ru(rng), ru(rng)}, seed));
    else
      t = full_choice_table(ts::random_nsc(ts::sizes({2, 2, 1}), seed));
    const auto sim = revealed_similarity(t);
    if (!sim.transitive() || !check_similarity_effect(t).passed) continue;
    ++premise;
    counter += !check_similar_regularity(t).passed;
  }
  report(6, counter == 0 && premise > 0,
         fmt("similarity effect => similar regularity: %.0f counterexamples, premise held on %.0f/200 tables",
             static_cast<double>(counter), static_cast<double>(premise)));
}

void criterion7() {
  std::size_t good = 0, violations = 0;
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 3 + static_cast<std::size_t>(i % 3);
    const auto t = ts::random_table(n, 800 + static_cast<std::uint64_t>(i));
    try {
      const auto sol = solve_cnl(t);
      double err = 0;
      for_each_subset(t.universe().all(), [&](Menu A) {
        for (std::size_t x : A) err = std::max(err, std::abs(gnl_prob(sol.model, x, A) - t.prob(x, A)));
      });
      worst = std::max(worst, err);
      violations += sol.diagnostics.invariant_violations;
      good += err < 1e-8 && sol.diagnostics.invariant_violations == 0;
    } catch (const Error&) {
    }
  }
  report(7, good == 50,
         fmt("CNL representations %.0f/50, max error %.3g, invariant violations %.0f", static_cast<double>(good), worst,
             static_cast<double>(violations)));
}

void criterion8() {
  const std::size_t b3 = count_partitions(3), b7 = count_partitions(7);
  report(8, b3 == 5 && b7 == 877, fmt("partition counts %.0f at |X|=3, %.0f at |X|=7", static_cast<double>(b3), static_cast<double>(b7)));
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  try {
    criterion1();
    const auto cases = exact_cases();
    criterion2(cases);
    criterion3();
    criterion4(cases);
    criterion5();
    criterion6();
    criterion7();
    criterion8();
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d criteria failed (%.1f s)\n", failures, secs);
  return failures == 0 ? 0 : 1;
}
