#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "commute/metrics.hpp"
#include "commute/rng.hpp"
#include "oracles.hpp"

using namespace commute;

namespace {

ODMatrix random_square(Rng& rng, std::size_t n, Count max_flow, double density = 0.6) {
  std::vector<Count> f(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && rng.uniform01() < density) f[i * n + j] = static_cast<Count>(rng.bounded(max_flow + 1));
    }
  }
  return oracle::square(n, f);
}

std::vector<std::pair<double, Count>> random_samples(Rng& rng, std::size_t k) {
  std::vector<std::pair<double, Count>> s;
  for (std::size_t t = 0; t < k; ++t) {
    // Coarse grid so that ties across distributions occur.
    s.emplace_back(1000.0 * static_cast<double>(rng.bounded(12)), 1 + static_cast<Count>(rng.bounded(5)));
  }
  return s;
}

} // namespace

TEST(Ncc, WorkedExamples) {
  const auto s = oracle::square(2, {0, 2, 1, 0});
  const auto r = oracle::square(2, {0, 1, 3, 0});
  EXPECT_EQ(ncc(s, r), 2);
  EXPECT_EQ(ncc(r, r), nc(r));
  EXPECT_EQ(ncc(oracle::square(2, {0, 4, 0, 0}), oracle::square(2, {0, 0, 7, 0})), 0);
  EXPECT_THROW(ncc(s, oracle::square(3, std::vector<Count>(9, 0))), ContractViolation);
}

TEST(Nc, WorkedExamples) {
  EXPECT_EQ(nc(oracle::square(3, std::vector<Count>(9, 0))), 0);
  EXPECT_EQ(nc(oracle::square(2, {0, 2, 3, 0})), 5);
}

TEST(Cpc, WorkedExamples) {
  const auto s = oracle::square(2, {0, 2, 1, 0});
  const auto r = oracle::square(2, {0, 1, 3, 0});
  EXPECT_NEAR(cpc(s, r), 4.0 / 7.0, 1e-12);
  EXPECT_EQ(cpc(r, r), 1.0);
  EXPECT_EQ(cpc(oracle::square(2, {0, 4, 0, 0}), oracle::square(2, {0, 0, 7, 0})), 0.0);
  const auto empty = oracle::square(2, {0, 0, 0, 0});
  EXPECT_THROW(cpc(empty, empty), DomainError);
}

TEST(Cpc, PropertiesOnRandomPairs) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.bounded(6);
    const auto s = random_square(rng, n, 6);
    const auto r = random_square(rng, n, 6);
    if (nc(s) + nc(r) == 0) continue;
    const double a = cpc(s, r);
    EXPECT_EQ(a, cpc(r, s));
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
    EXPECT_LE(ncc(s, r), std::min(nc(s), nc(r)));
    EXPECT_EQ(a == 1.0, s == r);
    bool disjoint = true;
    for (std::size_t k = 0; k < s.flows().size(); ++k) disjoint &= s.flows()[k] == 0 || r.flows()[k] == 0;
    EXPECT_EQ(a == 0.0, disjoint);
  }
}

TEST(CpcRegionalBlock, WorkedExamples) {
  // Collapsed [[0,1,2],[1,0,0],[2,1,0]] against R = [[0,1],[1,0]].
  const ODMatrix full({"a", "b"}, {"a", "b", "x"}, {0, 1, 2, 1, 0, 0});
  const std::vector<Count> in_totals{3, 2};
  const auto collapsed = collapse_to_region_plus_outside(full, in_totals);
  const ODMatrix r({"a", "b"}, {"a", "b"}, {0, 1, 1, 0});
  EXPECT_EQ(cpc_regional_block(collapsed.matrix(), r), 2.0 * 2.0 / (2.0 + 2.0));
  EXPECT_EQ(cpc_regional_block(full, r), 1.0);

  const ODMatrix outward_only({"a", "b"}, {"a", "b", "x"}, {0, 0, 3, 0, 0, 1});
  EXPECT_EQ(cpc_regional_block(outward_only, r), 0.0);
}

TEST(DistanceDistribution, WorkedExamples) {
  const MunicipalityRegistry reg({{"a", 0, 0, true}, {"b", 1000, 0, true}});
  const DistanceProvider dist(reg, DistanceStrategy::dense);
  auto d = distance_distribution(ODMatrix({"a", "b"}, {"a", "b"}, {0, 1, 1, 0}), dist, DistanceScope::region_only);
  EXPECT_EQ(d.total_weight(), 2);
  ASSERT_EQ(d.samples().size(), 1u);
  EXPECT_EQ(d.samples()[0], (std::pair<double, Count>{1000.0, 2}));

  const auto empty = distance_distribution(ODMatrix({"a", "b"}, {"a", "b"}, {0, 0, 0, 0}), dist,
                                           DistanceScope::region_only);
  EXPECT_TRUE(empty.degenerate());
  EXPECT_THROW(ks_distance(empty, d), DomainError);
}

TEST(DistanceDistribution, EcdfSteps) {
  // Two commuters at 1000 m and one at 3000 m.
  const WeightedDistanceDistribution d({{1000.0, 2}, {3000.0, 1}});
  EXPECT_NEAR(d.cdf(999.0), 0.0, 1e-15);
  EXPECT_NEAR(d.cdf(1000.0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.cdf(2999.0), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(d.cdf(3000.0), 1.0);
}

TEST(DistanceDistribution, ScopeAndTotals) {
  const MunicipalityRegistry reg({{"a", 0, 0, true}, {"b", 1000, 0, true}, {"x", 0, 5000, false}});
  const DistanceProvider dist(reg, DistanceStrategy::lazy);
  const ODMatrix s({"a", "b"}, {"a", "b", "x"}, {0, 2, 4, 1, 0, 3});
  const auto all = distance_distribution(s, dist, DistanceScope::region_and_outside);
  const auto region = distance_distribution(s, dist, DistanceScope::region_only);
  EXPECT_EQ(all.total_weight(), s.total());
  EXPECT_EQ(region.total_weight(), 3);
  EXPECT_EQ(all.samples().back().first, std::sqrt(1000.0 * 1000.0 + 5000.0 * 5000.0));
}

TEST(KsDistance, WorkedExamples) {
  const WeightedDistanceDistribution a({{1000.0, 1}, {2000.0, 1}});
  const WeightedDistanceDistribution b({{1000.0, 1}, {3000.0, 1}});
  EXPECT_EQ(ks_distance(a, a), 0.0);
  EXPECT_NEAR(ks_distance(a, b), 0.5, 1e-12);
  EXPECT_EQ(ks_distance(WeightedDistanceDistribution({{1000.0, 4}}), WeightedDistanceDistribution({{2000.0, 9}})), 1.0);
}

TEST(KsDistance, MatchesBruteForceAndIsAMetric) {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const auto sa = random_samples(rng, 1 + rng.bounded(8));
    const auto sb = random_samples(rng, 1 + rng.bounded(8));
    const auto sc = random_samples(rng, 1 + rng.bounded(8));
    const WeightedDistanceDistribution a(sa), b(sb), c(sc);
    const double ab = ks_distance(a, b);
    EXPECT_NEAR(ab, oracle::ks_bruteforce(sa, sb), 1e-12);
    EXPECT_EQ(ab, ks_distance(b, a));
    EXPECT_LE(ab, ks_distance(a, c) + ks_distance(c, b) + 1e-12);
    EXPECT_EQ(ab == 0.0, oracle::ks_bruteforce(sa, sb) < 1e-15);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(KsDistance, ScaledWeightsGiveSameEcdf) {
  const WeightedDistanceDistribution a({{500.0, 1}, {900.0, 3}});
  const WeightedDistanceDistribution b({{500.0, 2}, {900.0, 6}});
  EXPECT_EQ(ks_distance(a, b), 0.0);
}

TEST(BinnedDensity, NormalizesToOne) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const WeightedDistanceDistribution d(random_samples(rng, 1 + rng.bounded(30)));
    for (std::size_t bins : {1u, 7u, 50u}) {
      const auto h = binned_density(d, bins, 11000.0);
      double mass = 0.0;
      for (const auto& b : h) mass += (b.hi - b.lo) * b.density;
      EXPECT_NEAR(mass, 1.0, 1e-9);
      EXPECT_EQ(h.front().lo, 0.0);
      EXPECT_EQ(h.back().hi, 11000.0);
    }
  }
}

TEST(DistributionCsv, RoundTrip) {
  const WeightedDistanceDistribution d({{1234.5678901234, 3}, {0.1, 1}, {1234.5678901234, 2}});
  std::ostringstream out;
  write_distribution(out, d);
  std::istringstream in(out.str());
  EXPECT_EQ(read_distribution(in), d);
}
