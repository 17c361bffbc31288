#include <gtest/gtest.h>

#include <numbers>

#include "incsfa/metrics.hpp"
#include "incsfa/rng.hpp"

using namespace incsfa;

TEST(Rmse, SignAligned) {
  Eigen::MatrixXd a(3, 2), b(3, 2);
  a << 1, 2, 2, 0, 3, -1;
  b << -1, 2, -2, 0, -3, -1;
  const Eigen::VectorXd r = rmse_sign_aligned(a, b);
  EXPECT_DOUBLE_EQ(r[0], 0.0);
  EXPECT_DOUBLE_EQ(r[1], 0.0);
  b(0, 1) = 5;
  EXPECT_NEAR(rmse_sign_aligned(a, b)[1], std::sqrt(9.0 / 3.0), 1e-12);
  EXPECT_THROW(rmse_sign_aligned(a, Eigen::MatrixXd(2, 2)), InvalidInput);
}

TEST(DirectionCosine, Examples) {
  EXPECT_NEAR(direction_cosine(Eigen::Vector2d{1, 1}, Eigen::Vector2d{1, 0}), 0.70711, 1e-5);
  EXPECT_DOUBLE_EQ(direction_cosine(Eigen::Vector2d{-3, 0}, Eigen::Vector2d{1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(direction_cosine(Eigen::Vector2d{0, 0}, Eigen::Vector2d{1, 0}), 0.0);
  EXPECT_THROW(direction_cosine(Eigen::Vector2d{1, 0}, Eigen::Vector3d{1, 0, 0}), InvalidInput);
}

TEST(Delta, ConstantAndRamp) {
  const std::vector<double> c(10, 4.0);
  EXPECT_DOUBLE_EQ(delta_value(c), 0.0);
  EXPECT_DOUBLE_EQ(slowness_S(c, 100.0), 0.0);
  const std::vector<double> ramp{0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(delta_value(ramp), 1.0);
  EXPECT_THROW(delta_value(std::vector<double>{1.0}), InvalidInput);
}

TEST(Delta, UnitVarianceSineHasSlownessOne) {
  const double P = 100.0;
  std::vector<double> s;
  for (int t = 0; t < 1000; ++t) s.push_back(std::sqrt(2.0) * std::sin(2 * std::numbers::pi * t / P));
  EXPECT_NEAR(slowness_S(s, P), 1.0, 0.05);
}

TEST(Delta, WhiteNoiseIsTwo) {
  Rng rng(6);
  std::vector<double> s;
  for (int t = 0; t < 100000; ++t) s.push_back(rng.gaussian());
  EXPECT_NEAR(delta_value(s), 2.0, 0.05);
}

TEST(Correlation, Basics) {
  const Eigen::Vector4d a{1, 2, 3, 4};
  EXPECT_NEAR(correlation(a, 2.0 * a + Eigen::Vector4d::Ones()), 1.0, 1e-12);
  EXPECT_NEAR(correlation(a, -a), -1.0, 1e-12);
  EXPECT_DOUBLE_EQ(correlation(a, Eigen::Vector4d::Ones()), 0.0);
}

TEST(Purity, SeparatedAndMixedClasses) {
  Eigen::MatrixXd p(4, 1);
  p << 0.0, 0.1, 5.0, 5.1;
  const std::vector<int> labels{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(nearest_centroid_purity(p, labels), 1.0);
  const std::vector<int> swapped{0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(nearest_centroid_purity(p, swapped), 0.5);
  EXPECT_THROW(nearest_centroid_purity(p, std::vector<int>{0, 1}), InvalidInput);
}

TEST(PairwiseCosine, OrthogonalAndParallel) {
  EXPECT_DOUBLE_EQ(mean_pairwise_cosine(Eigen::Matrix3d::Identity()), 0.0);
  Eigen::MatrixXd rows(2, 2);
  rows << 1, 1, 1, 0;
  EXPECT_NEAR(mean_pairwise_cosine(rows), std::sqrt(0.5), 1e-12);
  EXPECT_DOUBLE_EQ(mean_pairwise_cosine(Eigen::MatrixXd(1, 3)), 0.0);
}
