#pragma once

#include <cstddef>
#include <span>

#include "pbr/types.hpp"

namespace pbr::fft {

// Thin wrappers over cached FFTW plans. Transforms are unnormalized in both
// directions (inverse(forward(x)) == n * x).

void forward(std::span<const cd> in, std::span<cd> out);
void inverse(std::span<const cd> in, std::span<cd> out);

inline void forward(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
  out.resize(in.size());
  forward(std::span<const cd>(in.data(), static_cast<std::size_t>(in.size())),
          std::span<cd>(out.data(), static_cast<std::size_t>(out.size())));
}

inline void inverse(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
  out.resize(in.size());
  inverse(std::span<const cd>(in.data(), static_cast<std::size_t>(in.size())),
          std::span<cd>(out.data(), static_cast<std::size_t>(out.size())));
}

/// `count` forward DFTs of the interleaved phases of `in`: transform r reads
/// in[r], in[r + count], in[r + 2 count], ... and is written contiguously to
/// out[r * m, (r + 1) * m), where m = in.size() / count. Out of place only.
void forward_interleaved(std::span<const cd> in, std::span<cd> out, std::size_t count);

/// Smallest n' >= n whose only prime factors are 2, 3, 5 and 7 (and, from
/// n = 1024 on, divisible by 32).
std::size_t next_fast_size(std::size_t n);

}  // namespace pbr::fft
