#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pbr/range_doppler_map.hpp"

namespace pbr {
namespace {

TEST(DopplerGrid, SymmetricMultiples) {
  const std::vector<double> g = doppler_grid(3.0, 1.0);
  EXPECT_EQ(g, (std::vector<double>{-3, -2, -1, 0, 1, 2, 3}));
  const std::vector<double> h = doppler_grid(1.0, 0.4);
  ASSERT_EQ(h.size(), 5u);
  EXPECT_NEAR(h.front(), -0.8, 1e-15);
  EXPECT_THROW(doppler_grid(1.0, 0.0), std::invalid_argument);
}

TEST(RangeDopplerMap, LookupsAndValidation) {
  RangeDopplerMap m;
  m.sample_rate = 400e3;
  m.delay_bins = {0, 2, 4};
  m.doppler_hz = {-1.0, 0.0, 1.0};
  m.values = Eigen::MatrixXcd::Zero(3, 3);
  EXPECT_NO_THROW(m.validate());
  EXPECT_EQ(m.delay_index(2), std::optional<std::size_t>(1));
  EXPECT_FALSE(m.delay_index(3));
  EXPECT_EQ(m.doppler_index(1.0), std::optional<std::size_t>(2));
  EXPECT_FALSE(m.doppler_index(0.5));
  EXPECT_NEAR(m.meters_per_bin(), 749.48, 0.01);
  m.delay_bins = {0, 4, 2};
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m.delay_bins = {0, 2};
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

struct CorrelationCase {
  long n;
  DelayMode mode;
};

class Correlation : public ::testing::TestWithParam<CorrelationCase> {};

TEST_P(Correlation, MatchesDirectDoubleSum) {
  const auto [n, mode] = GetParam();
  const double fs = 400e3;
  const Eigen::VectorXcd x = oracle::random_vector(static_cast<std::size_t>(n), 1);
  const Eigen::VectorXcd ref = oracle::random_vector(static_cast<std::size_t>(n), 2);
  const std::vector<int> delays = {0, 1, 3, 17, static_cast<int>(n) - 1};
  const double bin = fs / static_cast<double>(n);
  // On-grid, off-grid and a value near fs/2.
  const std::vector<double> dopplers = {-5 * bin, -bin, 0.0, 2 * bin, 0.37 * bin, 1234.5, 0.49 * fs};
  const Eigen::MatrixXcd got = delay_doppler_correlation(std::span<const cd>(x.data(), x.size()),
                                                         std::span<const cd>(ref.data(), ref.size()), delays,
                                                         dopplers, fs, mode);
  ASSERT_EQ(got.rows(), static_cast<Eigen::Index>(delays.size()));
  ASSERT_EQ(got.cols(), static_cast<Eigen::Index>(dopplers.size()));
  const double scale = x.norm() * ref.norm();
  for (std::size_t i = 0; i < delays.size(); ++i) {
    for (std::size_t j = 0; j < dopplers.size(); ++j) {
      const cd want = oracle::ccf(x, ref, delays[i], dopplers[j], fs, mode == DelayMode::circular);
      EXPECT_LE(std::abs(got(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - want), 1e-10 * scale)
          << "delay " << delays[i] << " doppler " << dopplers[j];
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, Correlation,
                         ::testing::Values(CorrelationCase{1000, DelayMode::circular},
                                           CorrelationCase{1000, DelayMode::linear},
                                           CorrelationCase{997, DelayMode::circular},
                                           CorrelationCase{2500, DelayMode::linear}));

TEST(Correlation, RejectsMismatchedInput) {
  const Eigen::VectorXcd x = oracle::random_vector(64, 1);
  const Eigen::VectorXcd r = oracle::random_vector(63, 2);
  const std::vector<int> delays = {0};
  const std::vector<double> dop = {0.0};
  EXPECT_THROW(delay_doppler_correlation(std::span<const cd>(x.data(), 64), std::span<const cd>(r.data(), 63),
                                         delays, dop, 1.0, DelayMode::circular),
               std::invalid_argument);
}

}  // namespace
}  // namespace pbr
