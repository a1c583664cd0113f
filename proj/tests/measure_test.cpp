#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "swgauge/errors.hpp"
#include "swgauge/measure.hpp"

namespace swgauge {
namespace {

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> values) {
  Eigen::MatrixXd m(values.size(), values.begin()->size());
  int i = 0;
  for (const auto& row : values) {
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

TEST(DiscreteMeasure, RejectsInvalidInput) {
  EXPECT_THROW(DiscreteMeasure(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), InvalidInput);
  EXPECT_THROW(DiscreteMeasure(rows({{1.0}, {2.0}}), Eigen::Vector2d(0.7, 0.7)), InvalidInput);
  EXPECT_THROW(DiscreteMeasure(rows({{1.0}, {2.0}}), Eigen::Vector2d(1.5, -0.5)), InvalidInput);
  EXPECT_THROW(DiscreteMeasure(rows({{NAN}}), Eigen::VectorXd::Ones(1)), InvalidInput);
  EXPECT_THROW(DiscreteMeasure(rows({{1.0}, {2.0}}), Eigen::VectorXd::Ones(1)), InvalidInput);
}

TEST(DiscreteMeasure, RenormalizesSmallMassDrift) {
  const DiscreteMeasure mu(rows({{0.0}, {1.0}}), Eigen::Vector2d(0.5, 0.5 + 5e-10));
  EXPECT_NEAR(mu.weights().sum(), 1.0, 1e-15);
}

TEST(Direction, RequiresUnitNorm) {
  EXPECT_THROW(Direction(Eigen::Vector2d(1.0, 1.0)), InvalidInput);
  EXPECT_NO_THROW(Direction(Eigen::Vector2d(0.6, 0.8)));
  EXPECT_NEAR(Direction::normalized(Eigen::Vector2d(3.0, 4.0)).components()[0], 0.6, 1e-16);
  EXPECT_THROW(Direction::normalized(Eigen::Vector2d::Zero()), InvalidInput);
}

TEST(TimedMeasure, TimeMustLieInHorizon) {
  const auto mu = DiscreteMeasure::dirac(Eigen::Vector2d(0, 0));
  EXPECT_THROW(TimedMeasure(1.5, mu, 1.0), InvalidInput);
  EXPECT_THROW(TimedMeasure(-0.1, mu, 1.0), InvalidInput);
  EXPECT_THROW(TimedMeasure(0.0, mu, 0.0), InvalidInput);
  EXPECT_NO_THROW(TimedMeasure(1.0, mu, 1.0));
}

TEST(SmoothingLevel, RejectsNegative) {
  EXPECT_THROW(SmoothingLevel(-1.0), InvalidInput);
  EXPECT_FALSE(SmoothingLevel(0.0).is_positive());
}

TEST(Project, CoordinateProjectionOfDirac) {
  const auto p = project(DiscreteMeasure::dirac(Eigen::Vector2d(3, 4)), Direction(Eigen::Vector2d(1, 0)));
  ASSERT_EQ(p.points.size(), 1u);
  EXPECT_DOUBLE_EQ(p.points[0], 3.0);
  EXPECT_DOUBLE_EQ(p.weights[0], 1.0);
}

TEST(Project, MergesCoincidentProjections) {
  const auto mu = DiscreteMeasure::uniform(rows({{1, 0}, {0, 1}}));
  const auto p = project(mu, Direction::normalized(Eigen::Vector2d(1, 1)));
  ASSERT_EQ(p.points.size(), 1u);
  EXPECT_NEAR(p.points[0], 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(p.weights[0], 1.0);
}

TEST(Project, SortsAtoms) {
  const auto mu = DiscreteMeasure::uniform(rows({{1, 2}, {3, -1}}));
  const auto p = project(mu, Direction(Eigen::Vector2d(0, 1)));
  ASSERT_EQ(p.points.size(), 2u);
  EXPECT_DOUBLE_EQ(p.points[0], -1.0);
  EXPECT_DOUBLE_EQ(p.points[1], 2.0);
  EXPECT_DOUBLE_EQ(p.weights[0], 0.5);
}

TEST(Project, DimensionMismatchThrows) {
  const auto mu = DiscreteMeasure::dirac(Eigen::Vector3d(1, 2, 3));
  EXPECT_THROW(project(mu, Direction(Eigen::Vector2d(1, 0))), InvalidInput);
}

TEST(Project, PreservesMassAndShrinksSecondMoment) {
  testing::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mu = testing::random_weighted_measure(rng, 6, 3);
    const auto theta = Direction::normalized(testing::random_atoms(rng, 1, 3).row(0).transpose());
    const auto p = project(mu, theta);
    double mass = 0.0;
    for (double w : p.weights) mass += w;
    EXPECT_NEAR(mass, 1.0, 1e-12);
    EXPECT_TRUE(std::is_sorted(p.points.begin(), p.points.end()));
    EXPECT_LE(second_moment(p), second_moment(mu) + 1e-12);
    // Every retained atom is an actual projection theta^T x_i.
    for (double v : p.points) {
      bool found = false;
      for (std::size_t i = 0; i < mu.size(); ++i) found = found || v == theta.project(mu.atom(i));
      EXPECT_TRUE(found);
    }
  }
}

TEST(Moments, SecondMomentExamples) {
  EXPECT_DOUBLE_EQ(second_moment(DiscreteMeasure::dirac(Eigen::Vector2d(0, 0))), 0.0);
  EXPECT_DOUBLE_EQ(second_moment(DiscreteMeasure::uniform(rows({{1, 0}, {0, 2}}))), 2.5);
  EXPECT_DOUBLE_EQ(second_moment(DiscreteMeasure::dirac(Eigen::Vector2d(3, 4))), 25.0);
}

TEST(Moments, SmoothedSecondMomentExamples) {
  EXPECT_DOUBLE_EQ(smoothed_second_moment(DiscreteMeasure::dirac(Eigen::Vector2d(0, 0)), SmoothingLevel(1.0)), 2.0);
  const auto mu = DiscreteMeasure::uniform(rows({{1, 0}, {0, 2}}));
  EXPECT_DOUBLE_EQ(smoothed_second_moment(mu, SmoothingLevel(0.0)), second_moment(mu));
  EXPECT_DOUBLE_EQ(smoothed_second_moment(DiscreteMeasure::dirac(Eigen::Vector2d(3, 4)), SmoothingLevel(2.0)), 33.0);
}

TEST(Moments, SmoothedSecondMomentMatchesMonteCarlo) {
  testing::Rng rng(11);
  const auto mu = testing::random_weighted_measure(rng, 4, 3);
  const double sigma = 0.7;
  std::discrete_distribution<std::size_t> pick(mu.weights().data(), mu.weights().data() + mu.size());
  std::normal_distribution<double> gauss(0.0, sigma);
  const int n = 100000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd y = mu.atom(pick(rng));
    for (int d = 0; d < 3; ++d) y[d] += gauss(rng);
    const double v = y.squaredNorm();
    sum += v;
    sum_sq += v * v;
  }
  const double mc = sum / n;
  const double stderr_ = std::sqrt((sum_sq / n - mc * mc) / n);
  EXPECT_NEAR(smoothed_second_moment(mu, SmoothingLevel(sigma)), mc, 3.0 * stderr_);
}

}  // namespace
}  // namespace swgauge
