#pragma once

#include <span>
#include <vector>

#include "pbr/range_doppler_map.hpp"
#include "pbr/scenario.hpp"

namespace pbr {

struct Detection;

/// Direct-path (reference) signal recovered by steering the array at the
/// illuminator.
struct DirectPathEstimate {
  ComplexSignal signal;
  double source_angle_deg = 90.0;
};

struct AngleSpectrum {
  std::vector<double> theta_deg;
  std::vector<double> values;  ///< |a^H(theta) z|^2
};

/// s_dp = X a*(theta_DA). Not normalised by L_A.
DirectPathEstimate estimate_direct_path(const ArrayData& x, double theta_da_deg);

/// Per-antenna map values at the detection's (delay, Doppler) cell.
Eigen::VectorXcd extract_snapshot(std::span<const RangeDopplerMap> per_antenna_maps,
                                  const Detection& det);

AngleSpectrum angle_spectrum(const Eigen::VectorXcd& z, const ArrayGeometry& geom,
                             std::span<const double> theta_grid_deg);

/// Grid angle of the spectrum maximum; equal maxima resolve to the smaller
/// angle.
double estimate_angle(const AngleSpectrum& spec);

/// 0..180 degrees inclusive at `step_deg`.
std::vector<double> default_angle_grid(double step_deg = 0.5);

}  // namespace pbr
