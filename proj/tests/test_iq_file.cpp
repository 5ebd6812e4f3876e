#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "oracles.hpp"
#include "pbr/iq_file.hpp"

namespace pbr {
namespace {

namespace fs = std::filesystem;

class IqFile : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("pbr_iq_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const char* name) const { return (dir_ / name).string(); }

  std::string bytes(const std::string& p) const {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  void write_bytes(const std::string& p, const std::string& b) const {
    std::ofstream(p, std::ios::binary).write(b.data(), static_cast<std::streamsize>(b.size()));
  }

  fs::path dir_;
};

IqMatrix float_exact(std::size_t rows, std::size_t cols) {
  IqMatrix m;
  m.sample_rate = 400e3;
  m.samples = oracle::random_matrix(rows, cols, 5);
  for (Eigen::Index j = 0; j < m.samples.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.samples.rows(); ++i) {
      const cd v = m.samples(i, j);
      m.samples(i, j) = cd(static_cast<float>(v.real()), static_cast<float>(v.imag()));
    }
  }
  return m;
}

TEST_F(IqFile, RoundTripIsBitIdentical) {
  const IqMatrix m = float_exact(37, 3);
  write_iq_file(path("a.pbriq"), m);
  const IqMatrix back = read_iq_file(path("a.pbriq"));
  EXPECT_EQ(back.sample_rate, m.sample_rate);
  ASSERT_EQ(back.samples.rows(), 37);
  ASSERT_EQ(back.samples.cols(), 3);
  EXPECT_EQ(back.samples, m.samples);
  EXPECT_EQ(fs::file_size(path("a.pbriq")), 6u + 4 + 4 + 8 + 37u * 3 * 8);
}

TEST_F(IqFile, HeaderLayout) {
  IqMatrix m;
  m.sample_rate = 1000.0;
  m.samples = Eigen::MatrixXcd(2, 1);
  m.samples << cd(1.0, -2.0), cd(0.5, 0.25);
  write_iq_file(path("h.pbriq"), m);
  const std::string b = bytes(path("h.pbriq"));
  ASSERT_EQ(b.size(), 22u + 16u);
  EXPECT_EQ(b.substr(0, 6), "PBRIQ1");
  EXPECT_EQ(std::string(b.data() + 6, 4), std::string("\x02\x00\x00\x00", 4));
  EXPECT_EQ(std::string(b.data() + 10, 4), std::string("\x01\x00\x00\x00", 4));
  double fs_read = 0.0;
  std::memcpy(&fs_read, b.data() + 14, 8);
  EXPECT_EQ(fs_read, 1000.0);
  float re = 0.0F;
  float im = 0.0F;
  std::memcpy(&re, b.data() + 22, 4);
  std::memcpy(&im, b.data() + 26, 4);
  EXPECT_EQ(re, 1.0F);
  EXPECT_EQ(im, -2.0F);
}

TEST_F(IqFile, RowMajorInterleaving) {
  IqMatrix m;
  m.sample_rate = 1.0;
  m.samples = Eigen::MatrixXcd(2, 2);
  m.samples << cd(1, 2), cd(3, 4), cd(5, 6), cd(7, 8);
  write_iq_file(path("r.pbriq"), m);
  const std::string b = bytes(path("r.pbriq"));
  float v[8];
  std::memcpy(v, b.data() + 22, sizeof v);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(v[i], static_cast<float>(i + 1));
}

TEST_F(IqFile, RejectsMalformedFiles) {
  write_iq_file(path("ok.pbriq"), float_exact(4, 2));
  const std::string good = bytes(path("ok.pbriq"));

  std::string bad = good;
  bad[5] = '2';
  write_bytes(path("magic.pbriq"), bad);
  EXPECT_THROW(read_iq_file(path("magic.pbriq")), std::invalid_argument);

  write_bytes(path("short.pbriq"), good.substr(0, good.size() - 3));
  EXPECT_THROW(read_iq_file(path("short.pbriq")), std::invalid_argument);

  write_bytes(path("long.pbriq"), good + "x");
  EXPECT_THROW(read_iq_file(path("long.pbriq")), std::invalid_argument);

  write_bytes(path("header.pbriq"), good.substr(0, 10));
  EXPECT_THROW(read_iq_file(path("header.pbriq")), std::invalid_argument);

  EXPECT_THROW(read_iq_file(path("missing.pbriq")), std::runtime_error);
}

}  // namespace
}  // namespace pbr
