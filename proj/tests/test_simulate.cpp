#include <algorithm>

#include <gtest/gtest.h>

#include "gft/otdist.hpp"
#include "gft/simulate.hpp"
#include "test_support.hpp"

using namespace gft;

namespace {

/// Every domain drawn from the target's distribution, equal sizes.
ScenarioSpec identical_domains_spec() {
  TwoSourceParams p;
  p.n_source1 = 200;
  p.n_source2 = 200;
  p.source1_mean = p.target_mean;
  p.source2_mean = p.target_mean;
  return two_source_spec(p);
}

}  // namespace

TEST(TwoSourceScenario, DefaultSizesAndGeometry) {
  const auto c = two_source_scenario(0);
  ASSERT_EQ(c.num_sources(), 2u);
  EXPECT_EQ(c.sources[0].domain_id, "S1");
  EXPECT_EQ(c.sources[1].domain_id, "S2");
  EXPECT_EQ(c.sources[0].n(), 20u);
  EXPECT_EQ(c.sources[1].n(), 1000u);
  EXPECT_EQ(c.target.test.size(), 200u);
  EXPECT_TRUE(c.target.test_labeled());
  EXPECT_FALSE(c.target.train_labeled());
  // Source 2 class centers sit at distance >= 3 from the target's.
  const TwoSourceParams p;
  for (double sign : {1.0, -1.0}) {
    const double dx = (p.source2_mean[0] + sign * p.class_offset[0]) - (p.target_mean[0] + sign * p.class_offset[0]);
    const double dy = p.source2_mean[1] - p.target_mean[1];
    EXPECT_GE(std::hypot(dx, dy), 3.0);
  }
}

TEST(TwoSourceScenario, Deterministic) {
  EXPECT_EQ(two_source_scenario(3), two_source_scenario(3));
  EXPECT_NE(two_source_scenario(3), two_source_scenario(4));
}

TEST(TwoSourceScenario, NearSourceIsCloserToTarget) {
  const TrainConfig tc;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto c = normalize_to_unit_ball(two_source_scenario(seed));
    const auto labels = pseudo_label_target(c, tc);
    const auto m = pairwise_disparity(c, labels, SinkhornConfig{});
    EXPECT_LT(m.at("S1", "T"), m.at("S2", "T")) << "seed " << seed;
  }
}

TEST(TwoSourceScenario, RejectsTinySizes) {
  TwoSourceParams p;
  p.n_source1 = 1;
  EXPECT_THROW(two_source_spec(p), InputError);
}

TEST(Comparison, FixedCollectionReproducible) {
  const auto c = normalize_to_unit_ball(two_source_scenario(1));
  const auto a = run_comparison(c, TrainConfig{}, {0, 1, 2});
  const auto b = run_comparison(c, TrainConfig{}, {0, 1, 2});
  ASSERT_EQ(a.methods.size(), 4u);
  for (std::size_t m = 0; m < 4; ++m) {
    EXPECT_EQ(a.methods[m].method, comparison_methods()[m]);
    EXPECT_EQ(a.methods[m].accuracies, b.methods[m].accuracies);
    EXPECT_EQ(a.methods[m].accuracies.size(), 3u);
  }
  EXPECT_THROW(run_comparison(c, TrainConfig{}, {}), InputError);
}

TEST(Comparison, GftWinsOnMostSeeds) {
  const auto spec = two_source_spec();
  const auto r = run_scenario_comparison(spec, TrainConfig{});
  int wins = 0;
  for (std::size_t s = 0; s < r.seeds.size(); ++s) {
    const double best_baseline = std::max({r.method("S1").accuracies[s], r.method("S2").accuracies[s],
                                           r.method("union").accuracies[s]});
    if (r.method("gft").accuracies[s] > best_baseline) ++wins;
  }
  EXPECT_GE(wins, 4);
  EXPECT_EQ(r, run_scenario_comparison(spec, TrainConfig{}));
}

TEST(Comparison, IdenticalDomainsGiveSimilarAccuracies) {
  const auto r = run_scenario_comparison(identical_domains_spec(), TrainConfig{});
  std::vector<double> medians;
  for (const auto& m : r.methods) medians.push_back(m.median);
  const auto [lo, hi] = std::minmax_element(medians.begin(), medians.end());
  EXPECT_LE(*hi - *lo, 0.05);
}

TEST(Summary, MeanStdMedian) {
  MethodResult r{"x", {0.5, 0.7, 0.9, 0.6}, 0, 0, 0};
  summarize(r);
  EXPECT_NEAR(r.mean, 0.675, 1e-15);
  EXPECT_NEAR(r.stddev, std::sqrt((0.175 * 0.175 + 0.025 * 0.025 + 0.225 * 0.225 + 0.075 * 0.075) / 3.0), 1e-15);
  EXPECT_NEAR(r.median, 0.65, 1e-15);
  MethodResult one{"y", {0.4}, 0, 0, 0};
  summarize(one);
  EXPECT_EQ(one.stddev, 0.0);
  EXPECT_EQ(one.median, 0.4);
}

TEST(Ablation, EndpointsMatchDirectTraining) {
  const auto c = normalize_to_unit_ball(two_source_scenario(2));
  const TrainConfig tc;
  Path full{{"S2", "S1"}, "T", 0, 1020, 2};
  const auto rows = path_length_ablation(c, full, tc);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].kappa, 1u);
  EXPECT_EQ(rows[1].kappa, 2u);
  EXPECT_EQ(rows[1].accuracy, target_accuracy(gft_train(full, c, tc), c));
  EXPECT_EQ(rows[0].accuracy, target_accuracy(fit(LinearModel::zero(2), c.sources[0].train, tc), c));
}

TEST(Ablation, LengthEqualsKappa) {
  auto spec = two_source_spec();
  spec.sources.push_back({"S3", spec.sources[0].spec});
  const auto c = normalize_to_unit_ball(generate(spec, 5));
  Path full{{"S2", "S3", "S1"}, "T", 0, 1040, 3};
  const auto rows = path_length_ablation(c, full, TrainConfig{});
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(rows[k].kappa, k + 1);
  EXPECT_THROW(path_length_ablation(c, Path{}, TrainConfig{}), InputError);
}
