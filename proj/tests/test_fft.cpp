#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pbr/fft.hpp"

namespace pbr {
namespace {

bool smooth7(std::size_t n) {
  for (std::size_t p : {2, 3, 5, 7})
    while (n % p == 0) n /= p;
  return n == 1;
}

class FftSizes : public ::testing::TestWithParam<int> {};

TEST_P(FftSizes, ForwardMatchesNaiveDft) {
  const auto n = static_cast<std::size_t>(GetParam());
  const Eigen::VectorXcd x = oracle::random_vector(n, 11 + n);
  Eigen::VectorXcd y;
  fft::forward(x, y);
  const Eigen::VectorXcd ref = oracle::dft(x);
  EXPECT_LE((y - ref).norm(), 1e-12 * ref.norm() * std::sqrt(static_cast<double>(n)) + 1e-14);
}

TEST_P(FftSizes, InverseIsUnnormalised) {
  const auto n = static_cast<std::size_t>(GetParam());
  const Eigen::VectorXcd x = oracle::random_vector(n, 5 + n);
  Eigen::VectorXcd y, z;
  fft::forward(x, y);
  fft::inverse(y, z);
  EXPECT_LE((z - static_cast<double>(n) * x).norm(), 1e-12 * static_cast<double>(n) * x.norm());
}

INSTANTIATE_TEST_SUITE_P(Lengths, FftSizes, ::testing::Values(1, 2, 7, 64, 210, 997, 1000));

TEST(Fft, InterleavedMatchesPerPhaseDft) {
  const std::size_t count = 3;
  const std::size_t m = 40;
  const Eigen::VectorXcd x = oracle::random_vector(count * m, 3);
  Eigen::VectorXcd out(static_cast<Eigen::Index>(count * m));
  fft::forward_interleaved(std::span<const cd>(x.data(), count * m), std::span<cd>(out.data(), count * m), count);
  for (std::size_t r = 0; r < count; ++r) {
    Eigen::VectorXcd phase(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) phase[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(r + i * count)];
    const Eigen::VectorXcd ref = oracle::dft(phase);
    EXPECT_LE((out.segment(static_cast<Eigen::Index>(r * m), static_cast<Eigen::Index>(m)) - ref).norm(),
              1e-12 * ref.norm());
  }
}

TEST(Fft, NextFastSizeIsSmallestAdmissible) {
  for (std::size_t n = 1; n <= 5000; ++n) {
    std::size_t want = n;
    while (!(smooth7(want) && (want < 1024 || want % 32 == 0))) ++want;
    ASSERT_EQ(fft::next_fast_size(n), want) << "n = " << n;
  }
  EXPECT_EQ(fft::next_fast_size(400000), 400000u);
}

}  // namespace
}  // namespace pbr
