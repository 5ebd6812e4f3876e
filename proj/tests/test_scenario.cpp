#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pbr/scenario.hpp"
#include "pbr/signal_synthesis.hpp"

namespace pbr {
namespace {

ComplexSignal short_illuminator(long n, double fs = 400e3) {
  ComplexSignal d;
  d.sample_rate = fs;
  d.samples = oracle::random_vector(static_cast<std::size_t>(n), 21);
  return d;
}

TEST(Geometry, SteeringVectorPhases) {
  ArrayGeometry g;
  g.num_antennas = 4;
  g.spacing_m = 0.5;
  g.wavelength_m = 1.0;
  const Eigen::VectorXcd a = steering_vector(g, 60.0);
  for (int l = 0; l < 4; ++l) {
    const cd want = std::polar(1.0, 2.0 * M_PI * 0.5 * std::cos(M_PI / 3.0) * l);
    EXPECT_NEAR(std::abs(a[l] - want), 0.0, 1e-14);
  }
  const Eigen::VectorXcd broadside = steering_vector(g, 90.0);
  EXPECT_NEAR((broadside - Eigen::VectorXcd::Ones(4)).norm(), 0.0, 1e-14);
}

TEST(Geometry, GratingLobeGate) {
  ArrayGeometry g;
  g.num_antennas = 2;
  g.spacing_m = 0.8;
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g.allow_grating_lobes = true;
  EXPECT_FALSE(g.validate().empty());
  g.spacing_m = 0.5;
  EXPECT_TRUE(g.validate().empty());
  g.num_antennas = 0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
}

TEST(Scenario, NoiselessDataMatchesSignalModel) {
  ScenarioConfig cfg;
  cfg.sample_rate = 1000.0;
  cfg.duration_s = 0.256;
  cfg.geometry.num_antennas = 3;
  cfg.direct_path_angle_deg = 80.0;
  cfg.direct_path_amplitude = {0.9, 0.1};
  cfg.clutter = {{5, 50.0, {0.3, -0.2}}};
  cfg.targets = {{17, 12.5, 110.0, {0.05, 0.02}}};
  const long n = 256;
  const ComplexSignal d = short_illuminator(n, cfg.sample_rate);

  for (DelayMode mode : {DelayMode::circular, DelayMode::linear}) {
    cfg.delay_mode = mode;
    const bool circ = mode == DelayMode::circular;
    const ArrayData x = simulate_array_data(cfg, d);
    ASSERT_EQ(x.rows(), 256u);
    ASSERT_EQ(x.antennas(), 3u);
    for (int l = 0; l < 3; ++l) {
      const double ld = l;
      for (long t = 0; t < n; ++t) {
        const auto steer = [&](double theta) {
          return std::polar(1.0, 2.0 * M_PI * 0.5 * std::cos(theta * M_PI / 180.0) * ld);
        };
        cd want = cfg.direct_path_amplitude * oracle::delayed(d.samples, t, 0, circ) * steer(80.0);
        want += cfg.clutter[0].amplitude * oracle::delayed(d.samples, t, 5, circ) * steer(50.0);
        want += cfg.targets[0].amplitude * oracle::delayed(d.samples, t, 17, circ) * steer(110.0) *
                oracle::phasor(12.5, t, cfg.sample_rate);
        ASSERT_NEAR(std::abs(x.matrix(t, l) - want), 0.0, 1e-12) << "t=" << t << " l=" << l;
      }
    }
  }
}

TEST(Scenario, NoisePowerAndSeed) {
  ScenarioConfig cfg;
  cfg.duration_s = 0.1;
  cfg.geometry.num_antennas = 2;
  cfg.direct_path_amplitude = 0.0;
  cfg.noise_power = 0.25;
  cfg.rng_seed = 99;
  const ComplexSignal d = short_illuminator(40000);
  const ArrayData a = simulate_array_data(cfg, d);
  const ArrayData b = simulate_array_data(cfg, d);
  EXPECT_EQ(a.matrix, b.matrix);
  const double p = a.matrix.squaredNorm() / static_cast<double>(a.matrix.size());
  EXPECT_NEAR(p, 0.25, 0.25 * 5.0 / std::sqrt(80000.0));
  cfg.rng_seed = 100;
  EXPECT_NE(simulate_array_data(cfg, d).matrix, a.matrix);
}

TEST(Scenario, ValidationErrors) {
  ScenarioConfig cfg;
  cfg.duration_s = 0.01;
  const ComplexSignal d = short_illuminator(4000);
  EXPECT_NO_THROW(simulate_array_data(cfg, d));

  ScenarioConfig bad = cfg;
  bad.targets = {{4000, 0.0, 90.0, 1.0}};
  EXPECT_THROW(simulate_array_data(bad, d), std::invalid_argument);
  bad = cfg;
  bad.targets = {{1, 200e3, 90.0, 1.0}};
  EXPECT_THROW(simulate_array_data(bad, d), std::invalid_argument);
  bad = cfg;
  bad.clutter = {{1, 181.0, 1.0}};
  EXPECT_THROW(simulate_array_data(bad, d), std::invalid_argument);
  bad = cfg;
  bad.noise_power = -1.0;
  EXPECT_THROW(simulate_array_data(bad, d), std::invalid_argument);
  bad = cfg;
  bad.duration_s = 0.0100001;
  EXPECT_THROW(simulate_array_data(bad, d), std::invalid_argument);
  bad = cfg;
  bad.duration_s = 0.02;
  EXPECT_THROW(simulate_array_data(bad, d), std::invalid_argument);  // illuminator too short
  ComplexSignal other = d;
  other.sample_rate = 200e3;
  EXPECT_THROW(simulate_array_data(cfg, other), std::invalid_argument);
}

TEST(Scenario, SingleAntenna) {
  ScenarioConfig cfg;
  cfg.duration_s = 0.01;
  cfg.geometry.num_antennas = 1;
  const ArrayData x = simulate_array_data(cfg, short_illuminator(4000));
  EXPECT_EQ(x.antennas(), 1u);
}

}  // namespace
}  // namespace pbr
