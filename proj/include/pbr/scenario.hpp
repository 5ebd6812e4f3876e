#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pbr/types.hpp"

namespace pbr {

/// Uniform linear array. Element l sits at l * spacing_m along the array axis.
struct ArrayGeometry {
  int num_antennas = 1;
  double spacing_m = 0.5;
  double wavelength_m = 1.0;
  /// Permit spacing > lambda/2 (grating lobes); validate() then reports a
  /// warning instead of throwing.
  bool allow_grating_lobes = false;

  /// Spatial frequency (delta / lambda) * cos(theta), cycles per element.
  [[nodiscard]] double angle_frequency(double theta_deg) const;

  /// Throws std::invalid_argument on an invalid geometry. Returns a warning
  /// message (empty if none).
  std::string validate() const;
};

struct TargetParam {
  int delay_samples = 0;
  double doppler_hz = 0.0;
  double angle_deg = 90.0;
  cd amplitude{1.0, 0.0};
};

/// Stationary scatterer: zero Doppler by construction.
struct ClutterParam {
  int delay_samples = 0;
  double angle_deg = 90.0;
  cd amplitude{1.0, 0.0};
};

struct ScenarioConfig {
  ArrayGeometry geometry;
  double direct_path_angle_deg = 90.0;
  /// Relative scale of the direct path; clutter and target amplitudes are
  /// expressed relative to a unit direct path.
  cd direct_path_amplitude{1.0, 0.0};
  std::vector<ClutterParam> clutter;
  std::vector<TargetParam> targets;
  double noise_power = 0.0;
  double duration_s = 1.0;
  double sample_rate = 400e3;
  std::uint64_t rng_seed = 0;
  DelayMode delay_mode = DelayMode::circular;

  [[nodiscard]] std::size_t num_samples() const;
  /// Checks every component invariant; throws std::invalid_argument.
  void validate() const;
};

/// Surveillance-array samples, one column per antenna.
struct ArrayData {
  Eigen::MatrixXcd matrix;  ///< L_T x L_A
  double sample_rate = 0.0;
  ArrayGeometry geometry;

  [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(matrix.rows()); }
  [[nodiscard]] std::size_t antennas() const { return static_cast<std::size_t>(matrix.cols()); }
};

/// a(theta)[l] = exp(j 2 pi (delta / lambda) cos(theta) l), l = 0..L_A-1.
Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double theta_deg);

/// Builds the L_T x L_A array snapshot matrix from the direct path, clutter,
/// targets and complex white Gaussian noise described by `cfg`, using the
/// first L_T samples of `d` as the illuminator.
ArrayData simulate_array_data(const ScenarioConfig& cfg, const ComplexSignal& d);

}  // namespace pbr
