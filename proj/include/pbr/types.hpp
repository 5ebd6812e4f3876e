#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pbr {

using cd = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Raised when a least-squares solve or other numerical stage cannot produce
/// a usable result (maps to CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How a delayed copy d[t - tau] is formed inside a finite window.
enum class DelayMode {
  circular,  ///< d[(t - tau) mod L_T], matches the circulant MECA reference
  linear,    ///< zero for t < tau
};

/// Real-valued, uniformly sampled waveform (the audio-like modulating signal).
struct BasebandSignal {
  std::vector<double> samples;
  double sample_rate = 0.0;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Complex baseband time series, e.g. the illuminator d(t) or a beamformed
/// direct-path estimate.
struct ComplexSignal {
  Eigen::VectorXcd samples;
  double sample_rate = 0.0;

  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(samples.size());
  }
  [[nodiscard]] double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Number of samples in a window of `duration_s` seconds; throws if the
/// product is not (close to) an integer.
std::size_t samples_in_window(double duration_s, double sample_rate);

}  // namespace pbr
