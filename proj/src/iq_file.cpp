#include "pbr/iq_file.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

namespace pbr {
namespace {

constexpr std::size_t kMagicSize = 6;
constexpr std::size_t kHeaderSize = kMagicSize + 4 + 4 + 8;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::vector<unsigned char>& buf, std::size_t at, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const auto bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[at + i] = static_cast<unsigned char>(bits >> (8 * i));
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_iq_file(const std::string& path, const IqMatrix& m) {
  const auto rows = static_cast<std::uint64_t>(m.samples.rows());
  const auto cols = static_cast<std::uint64_t>(m.samples.cols());
  if (rows > std::numeric_limits<std::uint32_t>::max() || cols > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("write_iq_file: matrix too large for the format");
  }
  std::vector<unsigned char> buf(kHeaderSize + rows * cols * 8);
  std::memcpy(buf.data(), kIqMagic, kMagicSize);
  put_le(buf, kMagicSize, static_cast<std::uint32_t>(rows));
  put_le(buf, kMagicSize + 4, static_cast<std::uint32_t>(cols));
  put_le(buf, kMagicSize + 8, m.sample_rate);
  std::size_t at = kHeaderSize;
  for (Eigen::Index r = 0; r < m.samples.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.samples.cols(); ++c) {
      put_le(buf, at, static_cast<float>(m.samples(r, c).real()));
      put_le(buf, at + 4, static_cast<float>(m.samples(r, c).imag()));
      at += 8;
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

IqMatrix read_iq_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kHeaderSize || std::memcmp(buf.data(), kIqMagic, kMagicSize) != 0) {
    throw std::invalid_argument(path + ": not a PBRIQ1 file");
  }
  const auto rows = get_le<std::uint32_t>(buf.data() + kMagicSize);
  const auto cols = get_le<std::uint32_t>(buf.data() + kMagicSize + 4);
  const auto fs = get_le<double>(buf.data() + kMagicSize + 8);
  const std::uint64_t payload = static_cast<std::uint64_t>(rows) * cols * 8;
  if (buf.size() - kHeaderSize != payload) {
    throw std::invalid_argument(path + ": payload size does not match the header dimensions");
  }
  if (!(fs > 0.0) || !std::isfinite(fs)) throw std::invalid_argument(path + ": invalid sample rate");

  IqMatrix m;
  m.sample_rate = fs;
  m.samples.resize(rows, cols);
  const unsigned char* p = buf.data() + kHeaderSize;
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      m.samples(r, c) = cd(get_le<float>(p), get_le<float>(p + 4));
      p += 8;
    }
  }
  return m;
}

}  // namespace pbr
