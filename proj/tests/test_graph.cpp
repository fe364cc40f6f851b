#include <random>

#include <gtest/gtest.h>

#include "gft/graph.hpp"
#include "test_support.hpp"

using namespace gft;
using gft::testing::random_disparity;

namespace {

SizeMap sizes_for(const DisparityMatrix& m, std::size_t n = 10) {
  SizeMap s;
  for (const auto& id : m.ids) s[id] = n;
  return s;
}

DisparityMatrix three_source_matrix() {
  return {{"S1", "S2", "S3", "T"},
          {{0.0, 0.2, 0.9, 0.1}, {0.2, 0.0, 0.8, 0.7}, {0.9, 0.8, 0.0, 0.6}, {0.1, 0.7, 0.6, 0.0}}};
}

}  // namespace

TEST(BuildGraph, CompleteWithoutTau) {
  const auto m = three_source_matrix();
  const auto g = build_graph(m, sizes_for(m), std::nullopt);
  EXPECT_EQ(g.num_vertices(), 4u);
  EXPECT_EQ(g.edges().size(), 6u);
  EXPECT_TRUE(g.is_complete());
  EXPECT_EQ(g.id(g.target()), "T");
}

TEST(BuildGraph, TauZeroRemovesEverything) {
  const auto m = three_source_matrix();
  EXPECT_TRUE(build_graph(m, sizes_for(m), 0.0).edges().empty());
}

TEST(BuildGraph, LargeTauKeepsEverything) {
  const auto m = three_source_matrix();
  EXPECT_EQ(build_graph(m, sizes_for(m), 1.9).edges().size(), 6u);
}

TEST(BuildGraph, StrictComparison) {
  const auto m = three_source_matrix();
  const auto g = build_graph(m, sizes_for(m), 0.6);
  EXPECT_FALSE(g.has_edge(g.index_of("S3"), g.index_of("T")));
  EXPECT_TRUE(g.has_edge(g.index_of("S1"), g.index_of("T")));
  EXPECT_EQ(g.edges().size(), 2u);
}

TEST(BuildGraph, WeightsEqualMatrixEntries) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_disparity(rng, 1 + t % 6);
    const auto g = build_graph(m, sizes_for(m), std::nullopt);
    for (const auto& e : g.edges()) EXPECT_EQ(e.weight, m.values(e.u, e.v));
    EXPECT_EQ(g.edges().size(), m.size() * (m.size() - 1) / 2);
    EXPECT_EQ(g.matrix(), m);
  }
}

TEST(BuildGraph, MonotoneInTau) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 30; ++t) {
    const auto m = random_disparity(rng, 5);
    std::uniform_real_distribution<double> u(0.0, 1.2);
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const auto ga = build_graph(m, sizes_for(m), a);
    const auto gb = build_graph(m, sizes_for(m), b);
    for (const auto& e : ga.edges()) EXPECT_TRUE(gb.has_edge(e.u, e.v));
  }
}

TEST(BuildGraph, MissingSourceSizeIsAnError) {
  const auto m = three_source_matrix();
  SizeMap s = {{"S1", 1}, {"S2", 1}, {"T", 1}};
  EXPECT_THROW(build_graph(m, s, std::nullopt), InputError);
  SizeMap no_target = {{"S1", 1}, {"S2", 1}, {"S3", 4}};
  EXPECT_NO_THROW(build_graph(m, no_target, std::nullopt));
}

TEST(Reachable, CompleteGraph) {
  const auto m = three_source_matrix();
  EXPECT_EQ(reachable_sources(build_graph(m, sizes_for(m), std::nullopt)),
            (std::set<std::string>{"S1", "S2", "S3"}));
}

TEST(Reachable, EmptyGraph) {
  const auto m = three_source_matrix();
  EXPECT_TRUE(reachable_sources(build_graph(m, sizes_for(m), 0.0)).empty());
}

TEST(Reachable, HandBuiltAdjacency) {
  // Only S1-T (0.1) and S1-S2 (0.2) survive tau = 0.5.
  const auto m = three_source_matrix();
  const auto g = build_graph(m, sizes_for(m), 0.5);
  EXPECT_EQ(g.edges().size(), 2u);
  EXPECT_EQ(reachable_sources(g), (std::set<std::string>{"S1", "S2"}));
}

TEST(Neighbors, SortedAndExcludeSelf) {
  const auto m = three_source_matrix();
  const auto g = build_graph(m, sizes_for(m), 0.65);
  EXPECT_EQ(g.neighbors(g.index_of("T")), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(g.weight(0, 0), -1.0);
}
