#include "pbr/scenario.hpp"

#include <cmath>
#include <random>

namespace pbr {
namespace {

void check_angle(double theta_deg, const char* what) {
  if (!(theta_deg >= 0.0 && theta_deg <= 180.0)) {
    throw std::invalid_argument(std::string(what) + ": angle must lie in [0, 180] degrees");
  }
}

// Adds amp * delayed(d, tau) * steering(l) [* doppler(t)] into every column.
void add_component(Eigen::MatrixXcd& x, const Eigen::VectorXcd& d, long tau, DelayMode mode,
                   cd amp, const Eigen::VectorXcd& steer, const Eigen::VectorXcd* doppler) {
  const long n = x.rows();
  Eigen::VectorXcd delayed = Eigen::VectorXcd::Zero(n);
  if (mode == DelayMode::circular) {
    for (long t = 0; t < tau; ++t) delayed[t] = d[t - tau + n];
    for (long t = tau; t < n; ++t) delayed[t] = d[t - tau];
  } else {
    for (long t = tau; t < n; ++t) delayed[t] = d[t - tau];
  }
  delayed *= amp;
  if (doppler != nullptr) delayed.array() *= doppler->array();
  for (long l = 0; l < x.cols(); ++l) x.col(l) += delayed * steer[l];
}

}  // namespace

double ArrayGeometry::angle_frequency(double theta_deg) const {
  return spacing_m / wavelength_m * std::cos(theta_deg * std::numbers::pi / 180.0);
}

std::string ArrayGeometry::validate() const {
  if (num_antennas < 1) throw std::invalid_argument("array geometry: need at least one antenna");
  if (!(spacing_m > 0.0)) throw std::invalid_argument("array geometry: spacing must be positive");
  if (!(wavelength_m > 0.0)) throw std::invalid_argument("array geometry: wavelength must be positive");
  if (spacing_m > 0.5 * wavelength_m * (1.0 + 1e-12)) {
    if (!allow_grating_lobes) {
      throw std::invalid_argument(
          "array geometry: spacing exceeds lambda/2 (set allow_grating_lobes to override)");
    }
    return "array spacing exceeds lambda/2; grating lobes are possible";
  }
  return {};
}

std::size_t ScenarioConfig::num_samples() const { return samples_in_window(duration_s, sample_rate); }

void ScenarioConfig::validate() const {
  geometry.validate();
  const long n = static_cast<long>(num_samples());
  check_angle(direct_path_angle_deg, "direct path");
  if (!(noise_power >= 0.0)) throw std::invalid_argument("scenario: noise_power must be >= 0");
  for (const auto& c : clutter) {
    check_angle(c.angle_deg, "clutter");
    if (c.delay_samples < 0 || c.delay_samples >= n) {
      throw std::invalid_argument("clutter: delay must lie in [0, L_T)");
    }
  }
  for (const auto& t : targets) {
    check_angle(t.angle_deg, "target");
    if (t.delay_samples < 0 || t.delay_samples >= n) {
      throw std::invalid_argument("target: delay must lie in [0, L_T)");
    }
    if (!(std::abs(t.doppler_hz) < 0.5 * sample_rate)) {
      throw std::invalid_argument("target: |Doppler| must be below fs/2");
    }
  }
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double theta_deg) {
  check_angle(theta_deg, "steering_vector");
  geom.validate();
  const double f = geom.angle_frequency(theta_deg);
  Eigen::VectorXcd a(geom.num_antennas);
  for (int l = 0; l < geom.num_antennas; ++l) a[l] = std::polar(1.0, kTwoPi * f * l);
  return a;
}

ArrayData simulate_array_data(const ScenarioConfig& cfg, const ComplexSignal& d) {
  cfg.validate();
  if (std::abs(d.sample_rate - cfg.sample_rate) > 1e-9 * cfg.sample_rate) {
    throw std::invalid_argument("simulate_array_data: illuminator sample rate differs from scenario");
  }
  const std::size_t n = cfg.num_samples();
  if (d.size() < n) {
    throw std::invalid_argument("simulate_array_data: illuminator shorter than the scenario window");
  }
  const Eigen::VectorXcd window = d.samples.head(static_cast<Eigen::Index>(n));
  const long nl = static_cast<long>(n);

  ArrayData out;
  out.sample_rate = cfg.sample_rate;
  out.geometry = cfg.geometry;
  out.matrix = Eigen::MatrixXcd::Zero(nl, cfg.geometry.num_antennas);

  if (cfg.direct_path_amplitude != cd{0.0, 0.0}) {
    add_component(out.matrix, window, 0, cfg.delay_mode, cfg.direct_path_amplitude,
                  steering_vector(cfg.geometry, cfg.direct_path_angle_deg), nullptr);
  }
  for (const auto& c : cfg.clutter) {
    add_component(out.matrix, window, c.delay_samples, cfg.delay_mode, c.amplitude,
                  steering_vector(cfg.geometry, c.angle_deg), nullptr);
  }
  Eigen::VectorXcd doppler(nl);
  for (const auto& tgt : cfg.targets) {
    for (long t = 0; t < nl; ++t) {
      // Reduce the cycle count first so the phase stays exact for long windows.
      const double cycles = std::remainder(tgt.doppler_hz * static_cast<double>(t) / cfg.sample_rate, 1.0);
      doppler[t] = std::polar(1.0, kTwoPi * cycles);
    }
    add_component(out.matrix, window, tgt.delay_samples, cfg.delay_mode, tgt.amplitude,
                  steering_vector(cfg.geometry, tgt.angle_deg), &doppler);
  }

  if (cfg.noise_power > 0.0) {
    std::mt19937_64 rng(cfg.rng_seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * cfg.noise_power));
    for (long l = 0; l < out.matrix.cols(); ++l) {
      for (long t = 0; t < nl; ++t) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        out.matrix(t, l) += cd(re, im);
      }
    }
  }
  return out;
}

}  // namespace pbr
