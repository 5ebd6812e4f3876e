#pragma once

#include <string>

#include "pbr/types.hpp"

namespace pbr {

/// Complex sample matrix stored as "PBRIQ1", u32 rows, u32 cols, f64 sample
/// rate (all little-endian), then row-major interleaved float32 re/im pairs.
struct IqMatrix {
  Eigen::MatrixXcd samples;
  double sample_rate = 0.0;
};

inline constexpr char kIqMagic[] = "PBRIQ1";

/// Samples are rounded to float32 on disk.
void write_iq_file(const std::string& path, const IqMatrix& m);

/// Throws std::runtime_error on I/O failure and std::invalid_argument on a
/// malformed file.
IqMatrix read_iq_file(const std::string& path);

}  // namespace pbr
