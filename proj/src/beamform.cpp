#include "pbr/beamform.hpp"

#include <cmath>

#include "pbr/detection.hpp"

namespace pbr {

DirectPathEstimate estimate_direct_path(const ArrayData& x, double theta_da_deg) {
  if (x.matrix.rows() == 0 || x.matrix.cols() == 0) {
    throw std::invalid_argument("estimate_direct_path: empty array data");
  }
  if (x.matrix.cols() != x.geometry.num_antennas) {
    throw std::invalid_argument("estimate_direct_path: column count differs from geometry");
  }
  const Eigen::VectorXcd a = steering_vector(x.geometry, theta_da_deg);
  DirectPathEstimate out;
  out.source_angle_deg = theta_da_deg;
  out.signal.sample_rate = x.sample_rate;
  out.signal.samples = x.matrix * a.conjugate();
  return out;
}

Eigen::VectorXcd extract_snapshot(std::span<const RangeDopplerMap> per_antenna_maps,
                                  const Detection& det) {
  if (per_antenna_maps.empty()) throw std::invalid_argument("extract_snapshot: no maps");
  const auto& first = per_antenna_maps.front();
  Eigen::VectorXcd z(static_cast<Eigen::Index>(per_antenna_maps.size()));
  for (std::size_t l = 0; l < per_antenna_maps.size(); ++l) {
    const auto& m = per_antenna_maps[l];
    if (m.delay_bins != first.delay_bins || m.doppler_hz != first.doppler_hz) {
      throw std::invalid_argument("extract_snapshot: antenna maps do not share axes");
    }
    if (det.delay_index >= m.num_delays() || det.doppler_index >= m.num_dopplers()) {
      throw std::invalid_argument("extract_snapshot: detection lies outside the map");
    }
    z[static_cast<Eigen::Index>(l)] =
        m.values(static_cast<Eigen::Index>(det.delay_index), static_cast<Eigen::Index>(det.doppler_index));
  }
  return z;
}

AngleSpectrum angle_spectrum(const Eigen::VectorXcd& z, const ArrayGeometry& geom,
                             std::span<const double> theta_grid_deg) {
  if (z.size() != geom.num_antennas) {
    throw std::invalid_argument("angle_spectrum: snapshot length differs from antenna count");
  }
  if (theta_grid_deg.empty()) throw std::invalid_argument("angle_spectrum: empty angle grid");
  AngleSpectrum out;
  out.theta_deg.assign(theta_grid_deg.begin(), theta_grid_deg.end());
  out.values.reserve(theta_grid_deg.size());
  for (double theta : theta_grid_deg) {
    const Eigen::VectorXcd a = steering_vector(geom, theta);
    out.values.push_back(std::norm(a.dot(z)));  // dot() conjugates its left operand
  }
  return out;
}

double estimate_angle(const AngleSpectrum& spec) {
  if (spec.values.empty() || spec.values.size() != spec.theta_deg.size()) {
    throw std::invalid_argument("estimate_angle: empty or inconsistent spectrum");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < spec.values.size(); ++i) {
    const bool better = spec.values[i] > spec.values[best] ||
                        (spec.values[i] == spec.values[best] && spec.theta_deg[i] < spec.theta_deg[best]);
    if (better) best = i;
  }
  return spec.theta_deg[best];
}

std::vector<double> default_angle_grid(double step_deg) {
  if (!(step_deg > 0.0) || step_deg > 180.0) {
    throw std::invalid_argument("default_angle_grid: step must lie in (0, 180]");
  }
  const auto n = static_cast<long>(std::floor(180.0 / step_deg + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) grid.push_back(static_cast<double>(i) * step_deg);
  return grid;
}

}  // namespace pbr
