#include <sstream>

#include <gtest/gtest.h>

#include "commute/geodata.hpp"
#include "commute/rng.hpp"

using namespace commute;

namespace {

MunicipalityRegistry three() {
  return MunicipalityRegistry({{"a", 0.0, 0.0, true}, {"b", 3.0, 4.0, true}, {"c", 1000.0, 2000.0, true}});
}

} // namespace

TEST(EuclideanDistance, WorkedExamples) {
  EXPECT_EQ(euclidean_distance({"a", 0, 0, true}, {"b", 0, 0, true}), 0.0);
  EXPECT_EQ(euclidean_distance({"a", 0, 0, true}, {"b", 3, 4, true}), 5.0);
  EXPECT_EQ(euclidean_distance({"a", 1000, 2000, true}, {"b", 4000, 6000, true}), 5000.0);
}

TEST(Registry, NormalizesRegionFirstPreservingOrder) {
  MunicipalityRegistry reg({{"x1", 5, 5, false}, {"r1", 0, 0, true}, {"x2", 6, 6, false}, {"r2", 1, 1, true}});
  ASSERT_EQ(reg.region_size(), 2u);
  ASSERT_EQ(reg.size(), 4u);
  EXPECT_EQ(reg.all_ids(), (std::vector<std::string>{"r1", "r2", "x1", "x2"}));
  EXPECT_EQ(*reg.index_of("x1"), 2u);
  EXPECT_EQ(reg[2].x, 5.0);
  EXPECT_FALSE(reg.index_of("nope"));
}

TEST(Registry, RejectsBadInput) {
  EXPECT_THROW(MunicipalityRegistry({{"a", 0, 0, true}, {"a", 1, 1, true}}), LoadError);
  EXPECT_THROW(MunicipalityRegistry({{"a", 0, 0, false}}), LoadError);
  EXPECT_THROW(MunicipalityRegistry({{"a", std::nan(""), 0, true}}), LoadError);
  EXPECT_THROW(MunicipalityRegistry({{"__OUTSIDE__", 0, 0, true}}), LoadError);
}

TEST(DistanceProvider, DenseMatchesPairwiseDefinition) {
  const auto reg = three();
  const auto dense = build_distance_provider(reg, DistanceStrategy::dense);
  ASSERT_EQ(dense.strategy(), DistanceStrategy::dense);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(dense(i, j), euclidean_distance(reg[i], reg[j]));
  }
  EXPECT_EQ(dense(0, 1), 5.0);
  EXPECT_EQ(dense(1, 1), 0.0);
}

TEST(DistanceProvider, LazyIdenticalToDense) {
  const auto reg = three();
  const auto dense = build_distance_provider(reg, DistanceStrategy::dense);
  const auto lazy = build_distance_provider(reg, DistanceStrategy::lazy);
  ASSERT_EQ(lazy.strategy(), DistanceStrategy::lazy);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(lazy(i, j), dense(i, j));
  }
}

TEST(DistanceProvider, AutoPicksByCellCount) {
  // 3020 x 6865 = 20,732,300 cells > 1e7.
  std::vector<Municipality> items;
  for (int k = 0; k < 6865; ++k) items.push_back({std::to_string(k), double(k), 0.0, k < 3020});
  MunicipalityRegistry big(std::move(items));
  EXPECT_EQ(build_distance_provider(big, DistanceStrategy::automatic, 10'000'000).strategy(), DistanceStrategy::lazy);
  const auto reg = three();
  EXPECT_EQ(build_distance_provider(reg, DistanceStrategy::automatic, 9).strategy(), DistanceStrategy::dense);
  EXPECT_EQ(build_distance_provider(reg, DistanceStrategy::automatic, 8).strategy(), DistanceStrategy::lazy);
}

TEST(DistanceProvider, RandomRegistriesStrategyInvariant) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + rng.bounded(30);
    const std::size_t n = 1 + rng.bounded(m);
    std::vector<Municipality> items;
    for (std::size_t k = 0; k < m; ++k) {
      items.push_back({std::to_string(k), rng.uniform01() * 1e5, rng.uniform01() * 1e5, k < n});
    }
    MunicipalityRegistry reg(items);
    const auto dense = build_distance_provider(reg, DistanceStrategy::dense);
    const auto lazy = build_distance_provider(reg, DistanceStrategy::lazy);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        ASSERT_EQ(dense(i, j), lazy(i, j));
        ASSERT_EQ(dense(i, j), euclidean_distance(reg[i], reg[j]));
        ASSERT_GE(dense(i, j), 0.0);
        if (j < n) {
          ASSERT_EQ(dense(i, j), dense(j, i));
        }
      }
    }
  }
}

TEST(MunicipalityCsv, ParsesAndRoundTrips) {
  std::istringstream in("id,x,y,in_region\nb,1.5,2,0\na,0,0,1\n");
  const auto reg = read_municipalities(in);
  ASSERT_EQ(reg.region_size(), 1u);
  EXPECT_EQ(reg[0].id, "a");
  EXPECT_EQ(reg[1].x, 1.5);
  std::ostringstream out;
  write_municipalities(out, reg);
  std::istringstream back(out.str());
  const auto again = read_municipalities(back);
  ASSERT_EQ(again.size(), reg.size());
  for (std::size_t k = 0; k < reg.size(); ++k) {
    EXPECT_EQ(again[k].id, reg[k].id);
    EXPECT_EQ(again[k].x, reg[k].x);
    EXPECT_EQ(again[k].y, reg[k].y);
    EXPECT_EQ(again[k].in_region, reg[k].in_region);
  }
}

TEST(MunicipalityCsv, LoadErrors) {
  std::istringstream dup("id,x,y,in_region\na,0,0,1\na,1,1,1\n");
  EXPECT_THROW(read_municipalities(dup), LoadError);
  std::istringstream header("id,x,y\na,0,0\n");
  EXPECT_THROW(read_municipalities(header), LoadError);
  std::istringstream flag("id,x,y,in_region\na,0,0,yes\n");
  EXPECT_THROW(read_municipalities(flag), LoadError);
  std::istringstream num("id,x,y,in_region\na,zero,0,1\n");
  EXPECT_THROW(read_municipalities(num), LoadError);
}
