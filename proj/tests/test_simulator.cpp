#include <gtest/gtest.h>

#include "support.hpp"

using namespace nflow;
using nflow::fixtures::Rng;

TEST(CounterRng, StreamsAreReproducibleAndDistinct) {
  CounterRng a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
    EXPECT_NE(x, d());
  }
  EXPECT_EQ(a.counter(), 100u);
}

TEST(CounterRng, UniformRange) {
  CounterRng r(7);
  double lo = 1, hi = 0, sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(Walk, ComposesLeftToRight) {
  const MapDistribution nu = fixtures::flip_example(Rational(1, 2));
  const auto walk = sample_discrete_walk(nu, 50, 9);
  ASSERT_EQ(walk.size(), 50u);
  const FlipGroupSpec g = flip_group(6);
  for (const MapTable& f : walk) EXPECT_NE(std::find(g.group.begin(), g.group.end(), f), g.group.end());
  // Consecutive ratios R_n o R_{n-1}^{-1} are single draws; flips are involutions.
  for (std::size_t i = 1; i < walk.size(); ++i) {
    const MapTable step = compose(walk[i], walk[i - 1]);
    EXPECT_NE(std::find(g.group.begin(), g.group.end(), step), g.group.end());
  }
}

TEST(Poisson, EdgeCasesAndErrors) {
  EXPECT_TRUE(poisson_subordinate(1.0, 0.0, 1).empty());
  EXPECT_THROW(poisson_subordinate(0.0, 1.0, 1), DomainError);
  EXPECT_THROW(poisson_subordinate(1.0, -1.0, 1), DomainError);
  EXPECT_THROW(poisson_subordinate(1.0, std::numeric_limits<double>::infinity(), 1), DomainError);
  const auto t = poisson_subordinate(2.0, 100.0, 5);
  EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
  EXPECT_GT(t.front(), 0.0);
  EXPECT_LE(t.back(), 100.0);
}

TEST(Poisson, MeanCount) {
  double total = 0;
  for (std::uint64_t s = 0; s < 200; ++s) total += static_cast<double>(poisson_subordinate(1.0, 100.0, s).size());
  // Mean of 200 Poisson(100) counts has standard deviation ~0.71.
  EXPECT_NEAR(total / 200, 100.0, 3.0);
}

TEST(Flow, RightContinuousState) {
  const TrajectorySample s = simulate_flow(fixtures::flip_example(Rational(1, 2)), 1.0, 20.0, 3);
  ASSERT_FALSE(s.jump_times.empty());
  EXPECT_EQ(s.state_at(0.0), MapTable::identity(6));
  EXPECT_EQ(s.state_at(s.jump_times[0]), s.maps[0]);
  EXPECT_EQ(s.state_at(std::nextafter(s.jump_times[0], 0.0)), MapTable::identity(6));
  EXPECT_EQ(s.state_at(1e9), s.maps.back());
}

TEST(Flow, SeedReproducibility) {
  const MapDistribution nu = fixtures::flip_example(Rational(1, 3));
  const TrajectorySample a = simulate_flow(nu, 1.5, 50.0, 77, true);
  const TrajectorySample b = simulate_flow(nu, 1.5, 50.0, 77, true);
  EXPECT_EQ(a.jump_times, b.jump_times);
  EXPECT_EQ(a.maps, b.maps);
  EXPECT_EQ(a.embedded, b.embedded);
  EXPECT_NE(simulate_flow(nu, 1.5, 50.0, 78).maps, a.maps);
}

TEST(Flow, OccupationSupports) {
  const PointTuple seed{{1, 2, 3, 4, 5, 6}};
  EXPECT_EQ(visited_tuples(simulate_flow(fixtures::flip_example(0), 1.0, 10000.0, 1), seed).size(), 4u);
  EXPECT_EQ(visited_tuples(simulate_flow(fixtures::flip_example(Rational(1, 2)), 1.0, 10000.0, 1), seed).size(), 8u);
}

TEST(Embedding, FunctorialityOnFlipGroup) {
  const FlipGroupSpec g = flip_group(6);
  for (const MapTable& f : g.group) {
    EXPECT_TRUE(is_orthogonal(embed_linear(f)));
    for (const MapTable& h : g.group) ASSERT_EQ(embed_linear(compose(f, h)), multiply(embed_linear(f), embed_linear(h)));
  }
}

TEST(Embedding, PropertyFunctorialAndOrthogonalIffBijective) {
  Rng rng(131);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 5);
    const MapTable f = fixtures::random_map(rng, m, false), h = fixtures::random_map(rng, m, false);
    ASSERT_EQ(embed_linear(compose(f, h)), multiply(embed_linear(f), embed_linear(h)));
    ASSERT_EQ(is_orthogonal(embed_linear(f)), f.is_bijection());
    const IntMatrix k = embed_linear(f);
    for (int j = 1; j <= m; ++j) ASSERT_EQ(k[static_cast<std::size_t>(f(j) - 1)][static_cast<std::size_t>(j - 1)], 1);
  }
}

TEST(Estimate, ConvergesToExactOnePointChain) {
  const MapDistribution nu = fixtures::flip_example(0);
  const EmpiricalEstimate est = empirical_transition_estimate(nu, 1, 100000, 5, {0, 1, 2, 3, 4, 5});
  EXPECT_LT(max_cell_error(est, lift_transition_matrix(nu, 1)), 0.01);
}

TEST(Estimate, MergeIsOrderIndependentAndChecksShape) {
  const MapDistribution nu = fixtures::flip_example(Rational(1, 2));
  const auto a = empirical_transition_estimate(nu, 2, 100, 1, {0, 7});
  const auto b = empirical_transition_estimate(nu, 2, 100, 2, {0, 7});
  EmpiricalEstimate ab = a, ba = b;
  ab.merge(b);
  ba.merge(a);
  EXPECT_EQ(ab.counts, ba.counts);
  EXPECT_EQ(ab.samples, ba.samples);
  EXPECT_THROW(ab.merge(empirical_transition_estimate(nu, 1, 10, 1, {0})), DomainError);
  EXPECT_THROW(empirical_transition_estimate(nu, 1, 0, 1, {0}), DomainError);
  EXPECT_THROW(empirical_transition_estimate(nu, 1, 10, 1, {6}), DomainError);
}

TEST(Estimate, SeededSourcesCoverRecurrentClass) {
  const auto est = empirical_transition_estimate(fixtures::flip_example(0), PointTuple{{1, 3}}, 1000, 4);
  EXPECT_EQ(est.samples.size(), 4u);
}
