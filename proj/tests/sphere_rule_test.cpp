#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "swgauge/errors.hpp"
#include "swgauge/sphere_rule.hpp"

namespace swgauge {
namespace {

bool has_antipode(const SphereRule& rule, std::size_t i) {
  for (const auto& other : rule.nodes()) {
    if ((other.components() + rule.nodes()[i].components()).norm() < 1e-12) return true;
  }
  return false;
}

void expect_valid(const SphereRule& rule) {
  double total = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    EXPECT_NEAR(rule.nodes()[i].components().norm(), 1.0, 1e-12);
    EXPECT_GT(rule.weights()[i], 0.0);
    total += rule.weights()[i];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(BuildRule, OneDimensionalPair) {
  const auto rule = build_rule(1, 17);
  ASSERT_EQ(rule.size(), 2u);
  EXPECT_EQ(rule.method(), SphereMethod::exact_pair);
  EXPECT_DOUBLE_EQ(rule.nodes()[0].components()[0], 1.0);
  EXPECT_DOUBLE_EQ(rule.nodes()[1].components()[0], -1.0);
  EXPECT_DOUBLE_EQ(rule.weights()[0], 0.5);
  EXPECT_DOUBLE_EQ(rule.weights()[1], 0.5);
}

TEST(BuildRule, EquispacedCircle) {
  const auto rule = build_rule(2, 4);
  ASSERT_EQ(rule.size(), 4u);
  EXPECT_EQ(rule.method(), SphereMethod::uniform_circle);
  for (int j = 0; j < 4; ++j) {
    const double angle = std::numbers::pi / 2.0 * j;
    EXPECT_NEAR(rule.nodes()[j].components()[0], std::cos(angle), 1e-15);
    EXPECT_NEAR(rule.nodes()[j].components()[1], std::sin(angle), 1e-15);
    EXPECT_DOUBLE_EQ(rule.weights()[j], 0.25);
  }
}

TEST(BuildRule, MonteCarloAntitheticPairs) {
  const auto rule = build_rule(3, 1000, std::nullopt, 42);
  ASSERT_EQ(rule.size(), 1000u);
  EXPECT_EQ(rule.method(), SphereMethod::monte_carlo);
  for (std::size_t i = 0; i < rule.size(); i += 2) {
    EXPECT_EQ(rule.nodes()[i].components(), -rule.nodes()[i + 1].components());
    EXPECT_DOUBLE_EQ(rule.weights()[i], 1e-3);
  }
  expect_valid(rule);
}

TEST(BuildRule, OddMonteCarloRoundsUpToPairs) {
  const auto rule = build_rule(3, 7, std::nullopt, 1);
  EXPECT_EQ(rule.size(), 8u);
  EXPECT_EQ(rule.requested_nodes(), 7);
  expect_valid(rule);
}

TEST(BuildRule, Deterministic) {
  const auto a = build_rule(4, 50, SphereMethod::monte_carlo, 7);
  const auto b = build_rule(4, 50, SphereMethod::monte_carlo, 7);
  const auto c = build_rule(4, 50, SphereMethod::monte_carlo, 8);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.nodes()[i].components(), b.nodes()[i].components());
  EXPECT_NE(a.nodes()[0].components(), c.nodes()[0].components());
}

TEST(BuildRule, Errors) {
  EXPECT_THROW(build_rule(0, 4), InvalidInput);
  EXPECT_THROW(build_rule(2, 0), InvalidInput);
  EXPECT_THROW(build_rule(3, -2), InvalidInput);
  EXPECT_THROW(build_rule(3, 4, SphereMethod::uniform_circle), InvalidInput);
  EXPECT_THROW(build_rule(2, 4, SphereMethod::exact_pair), InvalidInput);
  EXPECT_THROW(build_rule(1, 4, SphereMethod::monte_carlo), InvalidInput);
  EXPECT_THROW(parse_sphere_method("lebedev"), InvalidInput);
  EXPECT_NO_THROW(build_rule(1, 0));
}

TEST(SphereMethod, RoundTripsNames) {
  for (auto m : {SphereMethod::exact_pair, SphereMethod::uniform_circle, SphereMethod::monte_carlo}) {
    EXPECT_EQ(parse_sphere_method(to_string(m)), m);
  }
}

TEST(RuleInvariants, ValidAndSymmetric) {
  for (int n : {2, 4, 6, 64, 360}) {
    const auto rule = build_rule(2, n);
    expect_valid(rule);
    for (std::size_t i = 0; i < rule.size(); ++i) EXPECT_TRUE(has_antipode(rule, i));
  }
  for (int k : {2, 3, 5}) {
    const auto rule = build_rule(k, 40, SphereMethod::monte_carlo, 3);
    expect_valid(rule);
    for (std::size_t i = 0; i < rule.size(); ++i) EXPECT_TRUE(has_antipode(rule, i));
  }
  const auto pair = build_rule(1, 1);
  EXPECT_TRUE(has_antipode(pair, 0) && has_antipode(pair, 1));
}

TEST(AntipodalPartners, BuiltInRules) {
  const auto pair = antipodal_partners(build_rule(1, 2));
  EXPECT_EQ(pair, (std::vector<std::size_t>{0, 0}));
  const auto even = antipodal_partners(build_rule(2, 8));
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(even[i], i < 4 ? i : i - 4);
  const auto odd = antipodal_partners(build_rule(2, 7));
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(odd[i], i);
  const auto mc = antipodal_partners(build_rule(3, 10, std::nullopt, 4));
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(mc[i], i - i % 2);
}

TEST(AntipodalPartners, UnpairedNodes) {
  std::vector<Direction> nodes{Direction(Eigen::Vector2d(1, 0)), Direction(Eigen::Vector2d(-1, 0)),
                               Direction(Eigen::Vector2d(0, 1))};
  const SphereRule unequal(2, nodes, {0.5, 0.25, 0.25}, SphereMethod::uniform_circle, 0, 3);
  EXPECT_EQ(antipodal_partners(unequal), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(SecondMomentMatrix, Examples) {
  EXPECT_TRUE(second_moment_matrix(build_rule(2, 4)).isApprox(0.5 * Eigen::Matrix2d::Identity(), 1e-15));
  EXPECT_DOUBLE_EQ(second_moment_matrix(build_rule(1, 1))(0, 0), 1.0);
  const auto mc = second_moment_matrix(build_rule(3, 10000, std::nullopt, 2024));
  EXPECT_LT((mc - Eigen::Matrix3d::Identity() / 3.0).cwiseAbs().maxCoeff(), 0.05);
}

TEST(SecondMomentMatrix, SymmetricPsdUnitTrace) {
  for (int k : {2, 3, 4, 6}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto m = second_moment_matrix(build_rule(k, 31, SphereMethod::monte_carlo, seed));
      EXPECT_TRUE(m.isApprox(m.transpose(), 1e-15));
      EXPECT_NEAR(m.trace(), 1.0, 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-14);
    }
  }
}

TEST(SecondMomentMatrix, EquispacedCircleIsExact) {
  for (int n = 3; n <= 50; ++n) {
    const auto m = second_moment_matrix(build_rule(2, n));
    EXPECT_LT((m - 0.5 * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-12) << "n = " << n;
  }
}

TEST(Kappa, IsOneOverK) {
  EXPECT_DOUBLE_EQ(kappa(build_rule(1, 1)), 1.0);
  EXPECT_NEAR(kappa(build_rule(2, 64)), 0.5, 1e-15);
  EXPECT_NEAR(kappa(build_rule(2, 5)), 0.5, 1e-15);
  for (int n : {2, 10, 333}) EXPECT_NEAR(kappa(build_rule(3, n, std::nullopt, 5)), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(kappa(build_rule(7, 20, std::nullopt, 5)), 1.0 / 7.0, 1e-15);
}

TEST(Kappa, ProjectedSquareNorm) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  const auto circle = build_rule(2, 64);
  const auto mc = build_rule(3, 20000, std::nullopt, 9);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector2d x2(gauss(rng), gauss(rng));
    Eigen::Vector3d x3(gauss(rng), gauss(rng), gauss(rng));
    double s2 = 0.0, s3 = 0.0;
    for (std::size_t i = 0; i < circle.size(); ++i) s2 += circle.weights()[i] * std::pow(circle.nodes()[i].project(x2), 2);
    for (std::size_t i = 0; i < mc.size(); ++i) s3 += mc.weights()[i] * std::pow(mc.nodes()[i].project(x3), 2);
    EXPECT_NEAR(s2, kappa(circle) * x2.squaredNorm(), 1e-12 * x2.squaredNorm());
    EXPECT_NEAR(s3, kappa(mc) * x3.squaredNorm(), 0.05 * x3.squaredNorm());
  }
}

}  // namespace
}  // namespace swgauge
