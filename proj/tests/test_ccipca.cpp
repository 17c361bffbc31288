#include <gtest/gtest.h>

#include "incsfa/batch.hpp"
#include "incsfa/ccipca.hpp"
#include "incsfa/metrics.hpp"
#include "incsfa/rng.hpp"

using namespace incsfa;

namespace {
const AmnesicSchedule kAdapt{20, 200, 4.0, 5000.0};

std::vector<Frame> diag_gaussian(double s1, double s2, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Frame> out;
  for (int i = 0; i < n; ++i) out.push_back(Frame{{std::sqrt(s1) * rng.gaussian(), std::sqrt(s2) * rng.gaussian()}});
  return out;
}
}  // namespace

TEST(AmnesicMu, Sections) {
  EXPECT_DOUBLE_EQ(amnesic_mu(10, kAdapt), 0.0);
  EXPECT_DOUBLE_EQ(amnesic_mu(110, kAdapt), 2.0);
  EXPECT_DOUBLE_EQ(amnesic_mu(5200, kAdapt), 5.0);
}

TEST(AmnesicRate, Values) {
  EXPECT_DOUBLE_EQ(amnesic_rate(10, kAdapt), 0.1);
  EXPECT_DOUBLE_EQ(amnesic_rate(1, kAdapt), 1.0);
  EXPECT_NEAR(amnesic_rate(1'000'000'000, kAdapt), 1.0 / 5000.0, 1e-6);
  EXPECT_THROW(amnesic_rate(0, kAdapt), InvalidInput);
}

TEST(AmnesicRate, RateWeightsSumToOne) {
  const auto w = sample_weights(3000, [](std::uint64_t t) { return amnesic_rate(t, kAdapt); });
  double total = 0;
  for (double x : w) total += x;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_GT(w.back(), w.front());
}

TEST(AmnesicSchedule, Validation) {
  EXPECT_THROW((AmnesicSchedule{20, 10, 1, 1}).validate(), ConfigError);
  EXPECT_THROW((AmnesicSchedule{20, 200, -1, 1}).validate(), ConfigError);
  EXPECT_THROW((AmnesicSchedule{20, 200, 1, 0}).validate(), ConfigError);
}

TEST(ReduceDim, Examples) {
  const std::vector<double> lambda{4, 3, 2, 1};
  EXPECT_EQ(reduce_dim(lambda, 10.0, 0.6), 2u);
  EXPECT_EQ(reduce_dim(lambda, 10.0, 0.95), 4u);
  EXPECT_EQ(reduce_dim(lambda, 10.0, 1e-9), 1u);
  EXPECT_EQ(reduce_dim(std::vector<double>{0, 0}, 0.0, 0.5), 1u);
  EXPECT_THROW(reduce_dim(lambda, 10.0, 1.0), InvalidInput);
}

TEST(ExpectedErrorBound, Examples) {
  EXPECT_NEAR(expected_error_bound(std::vector<double>(100, 0.01), 1.0), 0.01, 1e-12);
  EXPECT_DOUBLE_EQ(expected_error_bound(std::vector<double>{1.0}, 3.5), 3.5);
  EXPECT_THROW(expected_error_bound(std::vector<double>{0.5}, 1.0), InvalidInput);
}

TEST(Ccipca, StationaryGaussianMatchesBatch) {
  const auto data = diag_gaussian(4.0, 1.0, 5000, 2);
  PrincipalComponentSet pcs(2, 2);
  std::uint64_t t = 0;
  for (const Frame& u : data) pcs.update(u, amnesic_rate(++t, AmnesicSchedule{20, 200, 2, 10000}));
  const EigenPairs oracle = batch_pca(to_matrix(data));
  EXPECT_NEAR(pcs.eigenvalue(0), 4.0, 0.4);
  EXPECT_NEAR(pcs.eigenvalue(0), oracle.values[0], 0.1 * oracle.values[0]);
  EXPECT_GT(direction_cosine(pcs.vectors().col(0), Frame{{1.0, 0.0}}), 0.99);
  EXPECT_GT(direction_cosine(pcs.vectors().col(0), oracle.vectors.col(0)), 0.99);
}

TEST(Ccipca, RepeatedInputFixedPoint) {
  const Frame u{{3.0, -1.0, 2.0}};
  PrincipalComponentSet pcs(3, 1);
  for (std::uint64_t t = 1; t <= 2000; ++t) pcs.update(t % 2 ? u : Frame(-u), 1.0 / static_cast<double>(t));
  EXPECT_GT(direction_cosine(pcs.vectors().col(0), u), 1.0 - 1e-12);
  // 1/t average of the seed u and 1999 steps of |u|^2 u_hat
  EXPECT_NEAR(pcs.eigenvalue(0), (u.norm() + 1999.0 * u.squaredNorm()) / 2000.0, 1e-9);
}

TEST(Ccipca, DeflatedResidualIsOrthogonal) {
  const auto data = diag_gaussian(4.0, 1.0, 500, 3);
  PrincipalComponentSet pcs(2, 2);
  std::uint64_t t = 0;
  for (const Frame& u : data) {
    pcs.update(u, amnesic_rate(++t, kAdapt));
    if (!pcs.ready()) continue;
    const auto chain = pcs.residual_chain(u);
    EXPECT_LT(std::abs(chain[1].dot(pcs.vectors().col(0).normalized())), 1e-10);
  }
}

TEST(Ccipca, ZeroSamplesDoNotSeed) {
  PrincipalComponentSet pcs(2, 2);
  pcs.update(Frame::Zero(2), 1.0);
  EXPECT_EQ(pcs.initialized(), 0u);
  pcs.update(Frame{{1, 0}}, 0.5);
  pcs.update(Frame{{0, 1}}, 0.3);
  EXPECT_TRUE(pcs.ready());
  pcs.update(Frame::Zero(2), 0.25);
  EXPECT_TRUE(pcs.vectors().allFinite());
}

TEST(Ccipca, Errors) {
  EXPECT_THROW(PrincipalComponentSet(2, 3), ConfigError);
  EXPECT_THROW(PrincipalComponentSet(0, 0), ConfigError);
  PrincipalComponentSet pcs(2, 1);
  EXPECT_THROW(pcs.update(Frame::Zero(3), 0.1), InvalidInput);
}

TEST(Ccipca, DescendingOrder) {
  PrincipalComponentSet pcs(3, 3);
  pcs.assign((Eigen::Matrix3d() << 1, 0, 0, 0, 5, 0, 0, 0, 3).finished(), 3, 3);
  EXPECT_EQ(pcs.descending_order(), (std::vector<Eigen::Index>{1, 2, 0}));
}

TEST(Whitening, ExactEigenpairs) {
  PrincipalComponentSet pcs(2, 2);
  pcs.assign((Eigen::Matrix2d() << 4, 0, 0, 1).finished(), 2, 2);
  const WhiteningTransform wt = whitening_transform(pcs);
  const auto data = diag_gaussian(4.0, 1.0, 10000, 5);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(data.size()), 2);
  for (std::size_t i = 0; i < data.size(); ++i) z.row(static_cast<Eigen::Index>(i)) = wt.apply(data[i]).transpose();
  const Eigen::MatrixXd c = z.transpose() * z / static_cast<double>(z.rows());
  EXPECT_LT((c - Eigen::Matrix2d::Identity()).norm(), 0.05);
}

TEST(Whitening, WhiteDataGivesRotation) {
  PrincipalComponentSet pcs(2, 2);
  const double a = 0.3;
  pcs.assign((Eigen::Matrix2d() << std::cos(a), -std::sin(a), std::sin(a), std::cos(a)).finished(), 2, 2);
  const Eigen::MatrixXd m = whitening_transform(pcs).matrix;
  EXPECT_LT((m * m.transpose() - Eigen::Matrix2d::Identity()).norm(), 1e-12);
}

TEST(Whitening, SingleComponentHasUnitVariance) {
  const auto data = diag_gaussian(9.0, 1.0, 20000, 6);
  PrincipalComponentSet pcs(2, 1);
  pcs.assign(Eigen::MatrixXd(Frame{{9.0, 0.0}}), 1, 1);
  const WhiteningTransform wt = whitening_transform(pcs);
  ASSERT_EQ(wt.output_dim(), 1u);
  double s2 = 0;
  for (const Frame& u : data) s2 += wt.apply(u).squaredNorm();
  EXPECT_NEAR(s2 / static_cast<double>(data.size()), 1.0, 0.05);
}

TEST(Whitening, FloorPolicies) {
  PrincipalComponentSet pcs(2, 2);
  pcs.assign((Eigen::Matrix2d() << 4, 0, 0, 1e-20).finished(), 2, 2);
  EXPECT_EQ(whitening_transform(pcs, 1e-12, FloorPolicy::drop).output_dim(), 1u);
  EXPECT_EQ(whitening_transform(pcs, 1e-12, FloorPolicy::zero).output_dim(), 2u);
  EXPECT_EQ(whitening_transform(pcs, 1e-12, FloorPolicy::zero).matrix.row(1).norm(), 0.0);
  EXPECT_THROW(whitening_transform(pcs, 1e-12, FloorPolicy::fail), ConfigError);
}

TEST(DeflatedProjections, MatchWhiteningForOrthogonalVectors) {
  PrincipalComponentSet pcs(2, 2);
  const double a = 0.4;
  pcs.assign((Eigen::Matrix2d() << 4 * std::cos(a), -std::sin(a), 4 * std::sin(a), std::cos(a)).finished(), 2, 2);
  const Frame u{{0.7, -1.3}};
  EXPECT_LT((pcs.deflated_projections(u) - whitening_transform(pcs).apply(u)).norm(), 1e-12);
}

TEST(DeflatedProjections, UseResidualForLeakingComponent) {
  PrincipalComponentSet pcs(2, 2);
  pcs.assign((Eigen::Matrix2d() << 4, 0.1, 0, 1).finished(), 2, 2);
  const Frame z = pcs.deflated_projections(Frame{{2.0, 0.0}});
  EXPECT_DOUBLE_EQ(z[0], 1.0);
  EXPECT_DOUBLE_EQ(z[1], 0.0);
}
