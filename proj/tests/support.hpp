// Model generators shared by the test suites and the acceptance binary.
#pragma once

#include <random>
#include <vector>

#include "nsc/models.hpp"
#include "nsc/simulate.hpp"

namespace testing_support {

inline nsc::NestStructure sizes(const std::vector<std::size_t>& s) {
  std::vector<std::size_t> labels;
  for (std::size_t k = 0; k < s.size(); ++k) labels.insert(labels.end(), s[k], k);
  return nsc::NestStructure::from_labels(labels);
}

// Random nondegenerate, block-separating NSC on the given structure.
inline nsc::NscModel random_nsc(const nsc::NestStructure& s, std::uint64_t seed, double lo = 0.5, double hi = 2.0) {
  nsc::SimConfig c;
  c.structure = s;
  c.u_low = c.v_low = lo;
  c.u_high = c.v_high = hi;
  nsc::Rng rng = nsc::stream(seed, {0xabc});
  return nsc::random_nsc(c, rng).model;
}

// Random block sizes summing to n with exactly k blocks, at most one singleton.
inline nsc::NestStructure random_structure(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  if (k < 1 || n + 1 < 2 * k) throw nsc::Error("invalid-config", "k blocks with at most one singleton need n >= 2k - 1");
  for (;;) {
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i < k ? i : std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
    std::shuffle(labels.begin(), labels.end(), rng);
    auto s = nsc::NestStructure::from_labels(labels);
    std::size_t singles = 0;
    for (nsc::Menu b : s.blocks()) singles += b.size() == 1;
    if (singles <= 1) return s;
  }
}

inline nsc::NestedLogitModel random_nested_logit(const nsc::NestStructure& s, const std::vector<double>& eta,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> du(0.5, 2.0);
  nsc::NestedLogitModel m{nsc::Universe::indexed(s.universe_size()), s, {}, eta};
  for (std::size_t i = 0; i < s.universe_size(); ++i) m.u.push_back(du(rng));
  return m;
}

// Uniform random strictly positive table.
inline nsc::ChoiceTable random_table(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.05, 1.0);
  nsc::ChoiceTable t(nsc::Universe::indexed(n));
  nsc::for_each_subset(nsc::Menu::first_n(n), [&](nsc::Menu m) {
    std::vector<double> r;
    double s = 0;
    for (std::size_t k = 0; k < m.size(); ++k) s += r.emplace_back(d(rng));
    for (double& x : r) x /= s;
    t.set(m, r);
  });
  return t;
}

}  // namespace testing_support
