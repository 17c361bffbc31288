#include <gtest/gtest.h>

#include <numbers>

#include "incsfa/batch.hpp"
#include "incsfa/metrics.hpp"
#include "incsfa/rng.hpp"
#include "incsfa/unit.hpp"
#include "incsfa/unit_io.hpp"

using namespace incsfa;

namespace {

UnitConfig small_config(std::uint64_t seed = 3) {
  UnitConfig c;
  c.input_dim = 3;
  c.K = 3;
  c.J = 2;
  c.ccipca_schedule = AmnesicSchedule{20, 200, 2, 10000};
  c.mca = McaRateSchedule{0.01, 0.01, 0};
  c.seed = seed;
  return c;
}

std::vector<Frame> mixed_stream(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Frame> out;
  for (std::size_t t = 0; t < n; ++t) {
    const double k = static_cast<double>(t);
    const double slow = std::sin(2 * std::numbers::pi * k / 400.0);
    const double fast = std::sin(2 * std::numbers::pi * k / 9.0);
    const double noise = rng.gaussian();
    out.push_back(Frame{{slow + 0.5 * fast, fast - 0.3 * noise, 0.4 * slow + noise}});
  }
  return out;
}

IncSfaUnit trained_unit(std::size_t n = 3000, std::uint64_t seed = 3) {
  IncSfaUnit u(small_config(seed));
  for (const Frame& x : mixed_stream(n, 11)) u.update(x);
  return u;
}

}  // namespace

TEST(UnitConfig, Validation) {
  UnitConfig c;
  c.input_dim = 10;
  c.expand = true;
  c.K = 40;
  c.J = 5;
  EXPECT_NO_THROW(c.validate());
  c.J = 41;
  EXPECT_THROW(c.validate(), ConfigError);
  c.K = 66;
  c.J = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  UnitConfig one;
  one.K = 1;
  one.J = 1;
  EXPECT_NO_THROW(one.validate());
  one.input_dim = 0;
  EXPECT_THROW(one.validate(), ConfigError);
}

TEST(Unit, OutputDimension) {
  IncSfaUnit u(small_config());
  const Frame y = u.update(Frame{{1, 2, 3}});
  EXPECT_EQ(y.size(), 2);
  EXPECT_EQ(u.steps(), 1u);
  EXPECT_FALSE(u.infer(Frame{{0, 0, 0}}).hasNaN());
}

TEST(Unit, NonFiniteInputLeavesStateUnchanged) {
  IncSfaUnit u = trained_unit(500);
  const auto before = u.save();
  EXPECT_THROW(u.update(Frame{{1.0, std::numeric_limits<double>::quiet_NaN(), 0.0}}), InvalidInput);
  EXPECT_THROW(u.update(Frame{{1.0, std::numeric_limits<double>::infinity(), 0.0}}), InvalidInput);
  EXPECT_THROW(u.update(Frame{{1.0, 2.0}}), InvalidInput);
  EXPECT_EQ(u.save(), before);
}

TEST(Unit, ConstantStreamGivesConstantOutput) {
  IncSfaUnit u(small_config());
  Frame last;
  for (int t = 0; t < 200; ++t) {
    const Frame y = u.update(Frame{{0.5, -1.0, 2.0}});
    ASSERT_TRUE(y.allFinite());
    if (t > 0) EXPECT_EQ(y, last);
    last = y;
  }
}

TEST(Unit, EpisodeBoundariesSuppressDerivative) {
  IncSfaUnit u(small_config());
  const auto data = mixed_stream(300, 2);
  std::size_t samples = 0;
  for (std::size_t e = 0; e < 3; ++e) {
    u.begin_episode();
    u.begin_episode();
    for (std::size_t t = 0; t < 100; ++t) {
      u.update(data[e * 100 + t]);
      ++samples;
    }
  }
  EXPECT_EQ(u.episodes(), 3u);
  EXPECT_EQ(u.derivative_updates(), samples - u.episodes());
  u.begin_episode();
  EXPECT_FALSE(u.has_previous());
}

TEST(Unit, InferIsPure) {
  IncSfaUnit u = trained_unit();
  const auto before = u.save();
  const Frame x{{0.2, -0.4, 1.1}};
  const Frame a = u.infer(x);
  const Frame b = u.infer(x);
  EXPECT_EQ(a, b);
  EXPECT_EQ(u.save(), before);
  EXPECT_EQ(a.size(), 2);
}

TEST(Unit, InferBeforeTrainingThrows) {
  const IncSfaUnit u(small_config());
  EXPECT_THROW(u.infer(Frame{{1, 2, 3}}), InvalidInput);
}

TEST(Unit, FeaturesStayUnitNorm) {
  const IncSfaUnit u = trained_unit();
  for (std::size_t i = 0; i < u.output_dim(); ++i) EXPECT_NEAR(u.slow_features().feature(i).norm(), 1.0, 1e-9);
}

TEST(Unit, FindsSlowSource) {
  IncSfaUnit u(small_config());
  const auto data = mixed_stream(4000, 11);
  for (int epoch = 0; epoch < 5; ++epoch)
    for (const Frame& x : data) u.update(x);
  Eigen::VectorXd y(static_cast<Eigen::Index>(data.size())), s(y.size());
  for (std::size_t t = 0; t < data.size(); ++t) {
    y[static_cast<Eigen::Index>(t)] = u.infer(data[t])[0];
    s[static_cast<Eigen::Index>(t)] = std::sin(2 * std::numbers::pi * static_cast<double>(t) / 400.0);
  }
  EXPECT_GT(std::abs(correlation(y, s)), 0.95);
}

TEST(Unit, SlownessReportOfSineIsOne) {
  UnitConfig c;
  c.input_dim = 1;
  c.K = 1;
  c.J = 1;
  c.mean_schedule = AmnesicSchedule{20, 200, 0, 1e12};
  c.ccipca_schedule = AmnesicSchedule{20, 200, 0, 1e12};
  c.mca = McaRateSchedule{0.002, 0.002, 0};
  c.slowness_period = 100.0;
  IncSfaUnit u(c);
  for (int t = 0; t < 20000; ++t) u.update(Frame::Constant(1, 3.0 + 2.0 * std::sin(2 * std::numbers::pi * t / 100.0)));
  const SlownessReport r = u.slowness_report();
  EXPECT_NEAR(r.slowness[0], 1.0, 0.05);
  EXPECT_NEAR(r.delta[0], std::pow(2 * std::numbers::pi / 100.0, 2), 0.1 * std::pow(2 * std::numbers::pi / 100.0, 2));
}

TEST(Unit, WhitenedOutputHasIdentityCovariance) {
  IncSfaUnit u = trained_unit(20000);
  const auto test = mixed_stream(5000, 12);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(test.size()), 3);
  for (std::size_t t = 0; t < test.size(); ++t) z.row(static_cast<Eigen::Index>(t)) = u.whitened(test[t]).transpose();
  const Eigen::MatrixXd centered = z.rowwise() - z.colwise().mean();
  const Eigen::MatrixXd c = centered.transpose() * centered / static_cast<double>(z.rows());
  EXPECT_LT((c - Eigen::Matrix3d::Identity()).norm(), 0.15);
}

TEST(Unit, SaveLoadRoundTripIsExact) {
  IncSfaUnit u = trained_unit();
  const auto bytes = u.save();
  IncSfaUnit v = IncSfaUnit::load(bytes);
  EXPECT_EQ(v.save(), bytes);
  EXPECT_TRUE(u == v);
  for (const Frame& x : mixed_stream(200, 40)) {
    const Frame a = u.update(x);
    const Frame b = v.update(x);
    ASSERT_EQ(a, b);
  }
}

TEST(Unit, CorruptedModelIsRejected) {
  auto bytes = trained_unit(300).save();
  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x01;
  EXPECT_THROW(IncSfaUnit::load(flipped), FormatError);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 9);
  EXPECT_THROW(IncSfaUnit::load(truncated), FormatError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(IncSfaUnit::load(magic), FormatError);
}

TEST(Unit, FixedSeedIsDeterministic) {
  EXPECT_EQ(trained_unit(1000, 7).save(), trained_unit(1000, 7).save());
}
