#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pbr/types.hpp"

namespace pbr {

/// Delay x Doppler grid of complex correlation values.
///
/// Rows follow `delay_bins` (samples), columns follow `doppler_hz`; both axes
/// are strictly increasing. One delay bin spans c / sample_rate metres of
/// bistatic range.
struct RangeDopplerMap {
  Eigen::MatrixXcd values;
  std::vector<int> delay_bins;
  std::vector<double> doppler_hz;
  double sample_rate = 0.0;

  [[nodiscard]] std::size_t num_delays() const { return delay_bins.size(); }
  [[nodiscard]] std::size_t num_dopplers() const { return doppler_hz.size(); }
  [[nodiscard]] double meters_per_bin() const { return kSpeedOfLight / sample_rate; }
  [[nodiscard]] Eigen::MatrixXd magnitude() const { return values.cwiseAbs(); }

  [[nodiscard]] std::optional<std::size_t> delay_index(int bin) const;
  /// Index of the grid column within `tol_hz` of `hz`, if any.
  [[nodiscard]] std::optional<std::size_t> doppler_index(double hz, double tol_hz = 1e-6) const;

  /// Throws std::invalid_argument if the axes are not strictly increasing or
  /// do not match the value matrix.
  void validate() const;
};

/// Symmetric Doppler grid {k * resolution_hz : |k * resolution_hz| <= span_hz}.
std::vector<double> doppler_grid(double span_hz, double resolution_hz);

/// Computes
///   xi(tau, f) = sum_{t=0}^{N-1} x[t] * conj(ref_tau[t]) * exp(-j 2 pi f t / fs)
/// where ref_tau is `ref` delayed by tau under `mode`. x and ref share length N.
///
/// Each delay costs one length-N FFT across time; Doppler values that sit on
/// the window's 1/T grid are read from FFT bins, any others fall back to a
/// direct sum.
Eigen::MatrixXcd delay_doppler_correlation(std::span<const cd> x, std::span<const cd> ref,
                                           std::span<const int> delays,
                                           std::span<const double> doppler_hz,
                                           double sample_rate, DelayMode mode);

}  // namespace pbr
