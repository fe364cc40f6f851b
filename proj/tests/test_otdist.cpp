#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "gft/otdist.hpp"
#include "test_support.hpp"

using namespace gft;
using gft::testing::iso_cov;
using gft::testing::random_cloud;

namespace {

const PointCloud kA5 = {{0.1, 0.9}, {-0.4, 0.3}, {0.7, -0.2}, {0.0, 0.0}, {-0.6, -0.8}};
const PointCloud kB5 = {{0.5, 0.5}, {-0.1, -0.3}, {0.8, 0.1}, {-0.7, 0.6}, {0.2, -0.9}};
const PointCloud kA6 = {{0.3, -0.1}, {0.9, 0.4}, {-0.2, -0.7}, {-0.8, 0.2}, {0.1, 0.6}, {0.45, -0.55}};
const PointCloud kB6 = {{0.6, 0.2}, {-0.5, -0.4}, {0.0, 0.95}, {0.75, -0.6}, {-0.9, 0.5}, {0.15, 0.05}};

SinkhornConfig at_eps(double eps) {
  SinkhornConfig c;
  c.epsilon = eps;
  c.max_iterations = 5000;
  return c;
}

/// Reference: enumerate every permutation directly.
double brute_force_assignment(const PointCloud& a, const PointCloud& b, double p) {
  const Matrix c = ground_cost_matrix(a, b, p);
  std::vector<std::size_t> perm(a.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double s = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += c(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.rows());
}

}  // namespace

TEST(JointEmbed, Examples) {
  std::vector<Sample> one = {{{0.5}, 1}};
  const auto e = joint_embed(one, 1.0);
  EXPECT_EQ(e, (PointCloud{{0.5, 1.0}}));
  const auto z = joint_embed(one, 0.0);
  EXPECT_EQ(z(0, 1), 0.0);
  std::vector<Sample> two = {{{1.0, 0.0}, -1}};
  EXPECT_EQ(joint_embed(two, 2.0), (PointCloud{{1.0, 0.0, -2.0}}));
}

TEST(JointEmbed, PseudoLabelsAndErrors) {
  std::vector<Sample> s = {{{0.1}, kNoLabel}, {{0.2}, kNoLabel}};
  std::vector<int> labels = {1, -1};
  EXPECT_EQ(joint_embed(s, labels, 1.0), (PointCloud{{0.1, 1.0}, {0.2, -1.0}}));
  EXPECT_THROW(joint_embed(s, 1.0), InputError);
  EXPECT_THROW(joint_embed(std::vector<Sample>{}, 1.0), InputError);
}

TEST(GroundCost, Examples) {
  EXPECT_EQ(ground_cost_matrix({{1.0, 2.0}}, {{1.0, 2.0}}, 2.0), (Matrix{{0.0}}));
  EXPECT_EQ(ground_cost_matrix({{0.0, 0.0}}, {{3.0, 4.0}}, 2.0), (Matrix{{5.0}}));
  EXPECT_EQ(ground_cost_matrix({{0.0}}, {{1.0}, {2.0}}, 1.0), (Matrix{{1.0, 2.0}}));
  EXPECT_THROW(ground_cost_matrix({{0.0}}, {{1.0, 2.0}}, 1.0), InputError);
}

TEST(GroundCost, GeneralPNorm) {
  const auto c = ground_cost_matrix({{0.0, 0.0}}, {{1.0, 2.0}}, 3.0);
  EXPECT_NEAR(c(0, 0), std::cbrt(9.0), 1e-14);
}

TEST(GroundCost, ScaleEquivariance) {
  std::mt19937_64 rng(3);
  for (double p : {1.0, 2.0, 3.5}) {
    auto a = random_cloud(rng, 4, 3), b = random_cloud(rng, 5, 3);
    const auto c = ground_cost_matrix(a, b, p);
    const double k = 2.75;
    for (auto* m : {&a, &b})
      for (std::size_t i = 0; i < m->rows(); ++i)
        for (std::size_t j = 0; j < m->cols(); ++j) (*m)(i, j) *= k;
    const auto ck = ground_cost_matrix(a, b, p);
    for (std::size_t i = 0; i < c.rows(); ++i)
      for (std::size_t j = 0; j < c.cols(); ++j) EXPECT_NEAR(ck(i, j), k * c(i, j), 1e-12);
  }
}

TEST(ExactOt, Examples) {
  EXPECT_EQ(exact_ot_small(kA5, kA5, 1.0), 0.0);
  EXPECT_EQ(exact_ot_small({{0.0}, {1.0}}, {{1.0}, {0.0}}, 1.0), 0.0);
}

TEST(ExactOt, FrozenAssignmentValues) {
  // Reference values from an independent Hungarian-algorithm solver.
  EXPECT_NEAR(exact_ot_small(kA5, kB5, 1.0), 0.62, 1e-12);
  EXPECT_NEAR(exact_ot_small(kA5, kB5, 2.0), 0.4857261601049395, 1e-12);
  EXPECT_NEAR(exact_ot_small(kA6, kB6, 1.0), 0.43333333333333335, 1e-12);
  EXPECT_NEAR(exact_ot_small(kA6, kB6, 2.0), 0.3302204362683444, 1e-12);
}

TEST(ExactOt, MatchesEnumerationOnRandomFivePointClouds) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_cloud(rng, 5, 2), b = random_cloud(rng, 5, 2);
    EXPECT_DOUBLE_EQ(exact_ot_small(a, b, 1.0), brute_force_assignment(a, b, 1.0));
  }
}

TEST(ExactOt, Guards) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(exact_ot_small(random_cloud(rng, 9, 2), random_cloud(rng, 9, 2), 1.0), InputError);
  EXPECT_THROW(exact_ot_small(random_cloud(rng, 3, 2), random_cloud(rng, 4, 2), 1.0), InputError);
  EXPECT_NO_THROW(exact_ot_small(random_cloud(rng, 8, 1), random_cloud(rng, 8, 1), 1.0));
}

TEST(Sinkhorn, TwoDiracs) {
  const auto r = sinkhorn_distance({{0.0}}, {{1.0}}, at_eps(0.01));
  EXPECT_NEAR(r.value, 1.0, 0.02);
  EXPECT_NEAR(exact_ot_small({{0.0}}, {{1.0}}, 1.0), 1.0, 1e-15);
}

TEST(Sinkhorn, SelfDistanceZero) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_cloud(rng, 3 + t % 7, 3);
    EXPECT_LE(sinkhorn_distance(a, a, at_eps(0.05)).value, 1e-6);
    EXPECT_LE(sinkhorn_distance(a, a, at_eps(0.01)).value, 1e-6);
  }
}

TEST(Sinkhorn, Symmetric) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_cloud(rng, 4 + t % 5, 2), b = random_cloud(rng, 3 + t % 4, 2);
    for (bool debiased : {true, false}) {
      auto cfg = at_eps(0.05);
      cfg.debiased = debiased;
      EXPECT_NEAR(sinkhorn_distance(a, b, cfg).value, sinkhorn_distance(b, a, cfg).value, 1e-9);
    }
  }
}

TEST(Sinkhorn, MatchesExactOnFixedInstances) {
  EXPECT_NEAR(sinkhorn_distance(kA5, kB5, at_eps(0.01)).value, 0.62, 0.05 * 0.62);
  EXPECT_NEAR(sinkhorn_distance(kA6, kB6, at_eps(0.01)).value, 0.43333333333333335, 0.05 * 0.43333333333333335);
}

TEST(Sinkhorn, EpsilonConsistency) {
  std::vector<std::pair<PointCloud, PointCloud>> instances = {{kA6, kB6}};
  std::mt19937_64 rng(1);
  for (int t = 0; t < 8; ++t) {
    auto a = random_cloud(rng, 6, 2);
    auto b = random_cloud(rng, 6, 2);
    instances.emplace_back(std::move(a), std::move(b));
  }
  for (const auto& [a, b] : instances) {
    const double exact = exact_ot_small(a, b, 1.0);
    double prev = 1e300;
    for (double eps : {1.0, 0.1, 0.01}) {
      const double err = std::abs(sinkhorn_distance(a, b, at_eps(eps)).value - exact);
      EXPECT_LE(err, prev + 1e-12) << "eps=" << eps;
      prev = err;
    }
  }
}

TEST(Sinkhorn, WeightedInputs) {
  std::vector<double> wa = {0.25, 0.75}, wb = {1.0};
  const auto r = sinkhorn_distance({{0.0}, {2.0}}, {{1.0}}, wa, wb, at_eps(0.01));
  // Every unit of mass travels distance 1.
  EXPECT_NEAR(r.value, 1.0, 0.02);
  const auto s = sinkhorn_distance({{1.0}}, {{0.0}, {2.0}}, wb, wa, at_eps(0.01));
  EXPECT_NEAR(r.value, s.value, 1e-9);
}

TEST(Sinkhorn, Errors) {
  std::vector<double> bad = {0.5, 0.4}, ok = {1.0};
  EXPECT_THROW(sinkhorn_distance({{0.0}, {1.0}}, {{0.0}}, bad, ok, at_eps(0.1)), InputError);
  EXPECT_THROW(sinkhorn_distance({{0.0}}, {{std::nan("")}}, at_eps(0.1)), std::runtime_error);
  EXPECT_THROW(sinkhorn_distance({{0.0}}, {{std::numeric_limits<double>::infinity()}}, at_eps(0.1)),
               std::runtime_error);
  auto cfg = at_eps(0.0);
  EXPECT_THROW(sinkhorn_distance({{0.0}}, {{1.0}}, cfg), InputError);
}

TEST(Sinkhorn, IterationCapReportedNotThrown) {
  std::mt19937_64 rng(2);
  auto cfg = at_eps(0.001);
  cfg.max_iterations = 1;
  const auto a = random_cloud(rng, 6, 2), b = random_cloud(rng, 6, 2);
  SinkhornResult r;
  EXPECT_NO_THROW(r = sinkhorn_distance(a, b, cfg));
  EXPECT_FALSE(r.converged);
  EXPECT_GE(r.value, 0.0);
}

namespace {

DomainCollection gaussian_collection(const std::vector<std::vector<double>>& source_means,
                                     const std::vector<double>& target_mean, std::uint64_t seed) {
  std::vector<Dataset> sources;
  for (std::size_t i = 0; i < source_means.size(); ++i)
    sources.push_back(make_gaussian_domain("S" + std::to_string(i + 1),
                                           {source_means[i], iso_cov(2), 15, 15, {0.5, 0}}, seed + i));
  return make_collection(std::move(sources),
                         make_gaussian_domain("T", {target_mean, iso_cov(2), 15, 15, {0.5, 0}}, seed + 100));
}

std::vector<int> true_target_labels(std::size_t n_pos, std::size_t n_neg) {
  std::vector<int> l(n_pos, 1);
  l.insert(l.end(), n_neg, -1);
  return l;
}

}  // namespace

TEST(PairwiseDisparity, ShapeAndInvariants) {
  const auto c = gaussian_collection({{0, 0}, {1, 1}, {-2, 0}}, {0.5, 0}, 7);
  const auto m = pairwise_disparity(c, true_target_labels(15, 15), SinkhornConfig{});
  EXPECT_EQ(m.size(), 4u);
  EXPECT_EQ(m.ids, (std::vector<std::string>{"S1", "S2", "S3", "T"}));
  EXPECT_NO_THROW(validate(m));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(m.values(i, j), m.values(j, i));
      if (i != j) {
        EXPECT_GT(m.values(i, j), 0.0);
      }
    }
}

TEST(PairwiseDisparity, SingleSource) {
  const auto c = gaussian_collection({{0, 0}}, {1, 0}, 3);
  const auto m = pairwise_disparity(c, true_target_labels(15, 15), SinkhornConfig{});
  EXPECT_EQ(m.size(), 2u);
  EXPECT_GT(m.values(0, 1), 0.0);
  EXPECT_EQ(m.values(0, 1), m.values(1, 0));
}

TEST(PairwiseDisparity, IdenticalSourcesAreAtZero) {
  auto c = gaussian_collection({{0, 0}}, {1, 0}, 3);
  Dataset copy = c.sources[0];
  copy.domain_id = "S1b";
  c.sources.push_back(copy);
  const auto m = pairwise_disparity(c, true_target_labels(15, 15), SinkhornConfig{});
  EXPECT_LE(m.at("S1", "S1b"), 1e-6);
}

TEST(PairwiseDisparity, SeparatedExceedsOverlapping) {
  const auto far = gaussian_collection({{0, 0}}, {10, 0}, 21);
  const auto near = gaussian_collection({{0, 0}}, {0.1, 0}, 21);
  const auto labels = true_target_labels(15, 15);
  const double d_far = pairwise_disparity(far, labels, SinkhornConfig{}).values(0, 1);
  const double d_near = pairwise_disparity(near, labels, SinkhornConfig{}).values(0, 1);
  EXPECT_GT(d_far, d_near);
  EXPECT_GT(d_far, 5.0);
}

TEST(PairwiseDisparity, DeterministicAndUsesPseudoLabels) {
  const auto c = gaussian_collection({{0, 0}, {1, 1}}, {0.5, 0}, 11);
  const auto labels = true_target_labels(15, 15);
  const auto m1 = pairwise_disparity(c, labels, SinkhornConfig{});
  EXPECT_EQ(m1, pairwise_disparity(c, labels, SinkhornConfig{}));
  std::vector<int> flipped(labels.rbegin(), labels.rend());
  const auto m2 = pairwise_disparity(c, flipped, SinkhornConfig{});
  EXPECT_EQ(m1.at("S1", "S2"), m2.at("S1", "S2"));
  EXPECT_NE(m1.at("S1", "T"), m2.at("S1", "T"));
  EXPECT_THROW(pairwise_disparity(c, std::vector<int>{1}, SinkhornConfig{}), InputError);
}

TEST(PairwiseDisparity, SubsamplingIsSeeded) {
  const auto c = gaussian_collection({{0, 0}, {1, 1}}, {0.5, 0}, 13);
  const auto labels = true_target_labels(15, 15);
  const auto a = pairwise_disparity(c, labels, SinkhornConfig{}, {10, 4});
  EXPECT_EQ(a, pairwise_disparity(c, labels, SinkhornConfig{}, {10, 4}));
  EXPECT_NE(a, pairwise_disparity(c, labels, SinkhornConfig{}, {10, 5}));
  EXPECT_NO_THROW(validate(a));
}

TEST(Subsample, KeepsOrderAndCap) {
  PointCloud c(20, 1);
  for (std::size_t i = 0; i < 20; ++i) c(i, 0) = static_cast<double>(i);
  const auto s = subsample_cloud(c, 7, 99);
  ASSERT_EQ(s.rows(), 7u);
  for (std::size_t i = 1; i < 7; ++i) EXPECT_LT(s(i - 1, 0), s(i, 0));
  EXPECT_EQ(subsample_cloud(c, std::nullopt, 0), c);
  EXPECT_EQ(subsample_cloud(c, 50, 0), c);
}

TEST(DisparityMatrixValidate, RejectsBrokenInvariants) {
  DisparityMatrix m{{"A", "T"}, {{0.0, 1.0}, {1.0, 0.0}}};
  EXPECT_NO_THROW(validate(m));
  m.values(0, 1) = 2.0;
  EXPECT_THROW(validate(m), InputError);
  m.values(0, 1) = -1.0;
  m.values(1, 0) = -1.0;
  EXPECT_THROW(validate(m), InputError);
  DisparityMatrix diag{{"A", "T"}, {{0.1, 1.0}, {1.0, 0.0}}};
  EXPECT_THROW(validate(diag), InputError);
}
