#include <gtest/gtest.h>

#include <random>

#include "nsc/similarity.hpp"
#include "nsc/simulate.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nsc;
namespace ts = testing_support;

namespace {

ChoiceTable bus_table() {
  Universe U({"r", "b", "t"});
  NestStructure s(3, {U.menu({"r", "b"}), U.menu({"t"})});
  NscModel m{U, s, {1, 1, 1}, BlockValues(s)};
  for (std::size_t k = 0; k < 2; ++k) for_each_subset(s.block(k), [&](Menu a) { m.v.set(k, a, 1.0); });
  return full_choice_table(m);
}

DistanceMatrix random_matrix(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  DistanceMatrix m{Universe::indexed(n), std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)),
                   std::vector<std::vector<double>>(n, std::vector<double>(n, 1.0))};
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) m.d[a][b] = m.d[b][a] = d(rng);
  return m;
}

}  // namespace

TEST(RevealedSimilarity, LuceIsComplete) {
  const auto t = full_choice_table(LuceModel{Universe::indexed(4), {1, 2, 3, 4}});
  const auto s = revealed_similarity(t);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) EXPECT_TRUE(s.related(a, b));
  EXPECT_EQ(s.classes().size(), 1u);
}

TEST(RevealedSimilarity, RedBlueBus) {
  const auto s = revealed_similarity(bus_table());
  EXPECT_TRUE(s.related(0, 1));
  EXPECT_FALSE(s.related(0, 2));
  EXPECT_FALSE(s.related(1, 2));
}

TEST(RevealedSimilarity, MatchesBlocksOfRandomNsc) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = ts::random_nsc(ts::sizes({3, 2, 2}), seed);
    const auto s = revealed_similarity(full_choice_table(m));
    for (std::size_t a = 0; a < 7; ++a)
      for (std::size_t b = 0; b < 7; ++b) EXPECT_EQ(s.related(a, b), m.structure.same_block(a, b));
    EXPECT_TRUE(s.transitive());
  }
}

TEST(RevealedSimilarity, IntransitiveClassesRejected) {
  SimilarityRelation s(Universe::indexed(3), true);
  s.relate(0, 1);
  s.relate(1, 2);
  ASSERT_TRUE(s.intransitive_triple());
  EXPECT_THROW(s.classes(), Error);
}

TEST(ApproxSimilarity, PlainNscRelatesAllCrossBlockPairs) {
  const auto m = ts::random_nsc(ts::sizes({2, 2, 2}), 4);
  const auto t = full_choice_table(m);
  const auto sim = revealed_similarity(t);
  const auto ap = approx_revealed_similarity(t, sim);
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 6; ++b)
      if (a != b) {
        EXPECT_EQ(ap.bowtie.related(a, b), !m.structure.same_block(a, b));
      }
  EXPECT_EQ(ap.combined.classes().size(), 1u);
}

TEST(ApproxSimilarity, WineAndBeerLayers) {
  // Wine = reds {r1, r2} and whites {w1, w2}; beer {b1, b2}. Inner nests need
  // two members each: singleton nests inside one outer block are revealed similar.
  Universe U({"r1", "r2", "w1", "w2", "b1", "b2"});
  auto outer = NestStructure::from_labels({0, 0, 0, 0, 1, 1});
  auto inner = NestStructure::from_labels({0, 0, 1, 1, 2, 2});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.5, 2.0);
  ThreeStepModel m{U, outer, inner, {}, BlockValues(inner), BlockValues(outer)};
  for (int i = 0; i < 6; ++i) m.u.push_back(d(rng));
  for (std::size_t l = 0; l < 3; ++l) for_each_subset(inner.block(l), [&](Menu a) { m.v.set(l, a, d(rng)); });
  for (std::size_t k = 0; k < 2; ++k) for_each_subset(outer.block(k), [&](Menu a) { m.w.set(k, a, d(rng)); });
  const auto t = full_choice_table(m);
  const auto sim = revealed_similarity(t);
  EXPECT_EQ(sim.classes(), inner);
  const auto ap = approx_revealed_similarity(t, sim);
  EXPECT_TRUE(ap.bowtie.related(0, 2));   // red ⋈ white
  EXPECT_FALSE(ap.bowtie.related(0, 4));  // wine vs beer
  EXPECT_FALSE(ap.bowtie.related(3, 5));
  EXPECT_EQ(ap.combined.classes(), outer);
}

TEST(ApproxSimilarity, TwoAlternativesHaveNoBowtie) {
  const auto t = full_choice_table(LuceModel{Universe::indexed(2), {1, 3}});
  const auto sim = revealed_similarity(t);
  const auto ap = approx_revealed_similarity(t, sim);
  EXPECT_FALSE(ap.bowtie.related(0, 1));
  EXPECT_TRUE(ap.vacuous.empty());
}

TEST(ApproxSimilarity, VacuousPairsAreFlagged) {
  // Two blocks only: no alternative is dissimilar to both members of a cross pair.
  const auto m = ts::random_nsc(ts::sizes({2, 2}), 6);
  const auto t = full_choice_table(m);
  const auto ap = approx_revealed_similarity(t, revealed_similarity(t));
  EXPECT_TRUE(ap.bowtie.related(0, 2));
  EXPECT_EQ(ap.vacuous.size(), 4u);
}

TEST(Distance, ExactNscSeparatesBlocks) {
  const auto m = ts::random_nsc(ts::sizes({3, 3}), 2);
  const auto data = Dataset::from_table(full_choice_table(m));
  const auto d = distance_matrix(data);
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 6; ++b) {
      if (a == b) {
        EXPECT_EQ(d.d[a][b], 0.0);
      } else if (m.structure.same_block(a, b)) {
        EXPECT_LT(d.d[a][b], 1e-25);
      } else {
        EXPECT_GT(d.d[a][b], 1e-6);
      }
      EXPECT_EQ(d.d[a][b], d.d[b][a]);
    }
}

TEST(Distance, MatchesOracleOnNoisyData) {
  const auto m = ts::random_nsc(ts::sizes({2, 3}), 12);
  Rng rng(5);
  const auto noisy = perturb_table(full_choice_table(m), 0.05, rng);
  const auto d = distance_matrix(Dataset::from_table(noisy));
  const auto ot = oracle::from_table(noisy);
  for (int a = 0; a < 5; ++a)
    for (int b = a + 1; b < 5; ++b)
      EXPECT_NEAR(d.d[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)], oracle::distance(ot, a, b), 1e-13);
  // 2^(5-2) = 8 menus contain any pair; 8^2 ordered menu pairs.
  EXPECT_DOUBLE_EQ(d.pair_counts[0][1], 64.0);
}

TEST(Distance, InvariantToCountScale) {
  const auto t = full_choice_table(ts::random_nsc(ts::sizes({2, 2}), 7));
  Rng rng(9);
  const auto noisy = perturb_table(t, 0.1, rng);
  const auto d1 = distance_matrix(Dataset::from_table(noisy, 1.0));
  const auto d2 = distance_matrix(Dataset::from_table(noisy, 12345.0));
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) EXPECT_NEAR(d1.d[a][b], d2.d[a][b], 1e-12);
}

TEST(Distance, SingleMenuPerPairIsZero) {
  Dataset data(Universe::indexed(3));
  data.add("ab", Menu(0b011), {3, 5});
  data.add("bc", Menu(0b110), {2, 7});
  const auto d = distance_matrix(data);
  EXPECT_EQ(d.d[0][1], 0.0);
  EXPECT_EQ(d.d[1][2], 0.0);
  EXPECT_EQ(d.pair_counts[0][2], 0.0);
}

TEST(Distance, ZeroFrequencyNeedsSmoothing) {
  Dataset data(Universe({"a", "b"}));
  data.add("m1", Menu(0b11), {0, 5});
  try {
    distance_matrix(data);
    FAIL() << "expected zero-frequency";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "zero-frequency");
    EXPECT_NE(e.detail().find("\"alternative\":\"a\""), std::string::npos);
  }
  EXPECT_NO_THROW(distance_matrix(data, true));
}

TEST(EpsilonPartitionTest, Extremes) {
  const auto m = ts::random_nsc(ts::sizes({3, 2}), 3);
  const auto d = distance_matrix(Dataset::from_table(full_choice_table(m)));
  EXPECT_EQ(*epsilon_partition(d, 0.0).partition, NestStructure::singletons(5));
  EXPECT_EQ(*epsilon_partition(d, 1e9).partition, NestStructure::one_block(5));
  EXPECT_EQ(*epsilon_partition(d, 1e-12).partition, m.structure);
}

TEST(EpsilonPartitionTest, IntransitiveReported) {
  DistanceMatrix d{Universe::indexed(3), {{0, 1, 3}, {1, 0, 1}, {3, 1, 0}}, {}};
  const auto r = epsilon_partition(d, 2.0);
  EXPECT_FALSE(r.partition);
  ASSERT_TRUE(r.violation);
}

TEST(EpsilonPartitionTest, MonotoneInThreshold) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const auto d = random_matrix(6, rng);
    std::optional<NestStructure> prev;
    for (double e = 0.0; e <= 1.05; e += 0.05) {
      auto r = epsilon_partition(d, e);
      if (!r.partition) continue;
      if (prev) {
        EXPECT_TRUE(prev->refines(*r.partition));
      }
      prev = r.partition;
    }
  }
}

TEST(Candidates, LuceGivesTwoExtremes) {
  // Equal utilities keep every d exactly 0; generic utilities leave roundoff
  // of order 1e-33, which the strict threshold rule resolves as distinct levels.
  const auto d = distance_matrix(Dataset::from_table(full_choice_table(LuceModel{Universe::indexed(4), {1, 1, 1, 1}})));
  const auto c = candidate_partitions(d);
  ASSERT_EQ(c.partitions.size(), 2u);
  EXPECT_EQ(c.partitions[0], NestStructure::singletons(4));
  EXPECT_EQ(c.partitions[1], NestStructure::one_block(4));
}

TEST(Candidates, ContainTrueStructure) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = ts::random_nsc(ts::sizes({3, 3}), seed);
    const auto c = candidate_partitions(distance_matrix(Dataset::from_table(full_choice_table(m))));
    EXPECT_NE(std::find(c.partitions.begin(), c.partitions.end(), m.structure), c.partitions.end());
  }
}

TEST(Candidates, NeverMoreThanUniverseSize) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 2 + rep % 9;
    const auto c = candidate_partitions(random_matrix(n, rng));
    EXPECT_LE(c.partitions.size(), n);
    EXPECT_EQ(c.partitions.front(), NestStructure::singletons(n));
  }
}

TEST(BlockSeparation, Cases) {
  auto s = ts::sizes({2, 2});
  const std::vector<double> u{1, 2, 3, 4};
  NscModel prop{Universe::indexed(4), s, u, make_preset_v(LinearPreset{{1, 1}, {0, 0}}, s, u)};
  EXPECT_FALSE(check_assumption1(prop).passed);

  NestedLogitModel nl{Universe::indexed(5), ts::sizes({2, 3}), {1.3, 0.6, 1.9, 0.8, 1.1}, {0.4, 0.9}};
  EXPECT_TRUE(check_assumption1(nl.to_nsc()).passed);

  auto one = NestStructure::one_block(3);
  NscModel single{Universe::indexed(3), one, {1, 2, 3}, BlockValues(one)};
  for_each_subset(one.block(0), [&](Menu a) { single.v.set(0, a, 1.0); });
  EXPECT_TRUE(check_assumption1(single).passed);
  EXPECT_THROW(check_assumption1(NscModel{Universe::indexed(11), NestStructure::one_block(11),
                                          std::vector<double>(11, 1.0), BlockValues(NestStructure::one_block(11))}),
               Error);
}
