#include <gtest/gtest.h>

#include <string>

#include "pbr/config.hpp"

namespace pbr {
namespace {

const char* const kFull = R"(seed: 42
scenario:
  sample_rate: 400000
  duration_s: 0.5
  noise_power: 0.01
  delay_mode: linear
  geometry: {num_antennas: 4, wavelength_m: 2.0}
  direct_path: {angle_deg: 80, amplitude: [0.5, 0.5]}
  clutter:
    - {delay: 3, angle_deg: 60, amplitude: 0.2}
  targets:
    - {delay: 40, doppler_hz: -12.5, angle_deg: 100, amplitude: [0, 0.1]}
illuminator:
  freq_deviation_hz: 50000
  tilt_exponent: 1.0
processing:
  canceller: eca
  meca: {q_bar: 20, p: 1}
  eca: {q: 30, p: 3, window_s: 0.25}
  joint_projection: false
  ls_route: structured
  rank_tolerance: 1.0e-10
detector:
  max_delay: 64
  threshold_db: 15
  strong_window: windowed
  summation: coherent
  max_passes: 3
compare:
  sidelobe_span_hz: 20
  delays: [3, 5]
aaf:
  max_delay: 50
  guard_delay: 4
)";

int error_line(const std::string& text) {
  try {
    parse_config(text, "test.yaml");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("test.yaml:" + std::to_string(e.line())), std::string::npos) << e.what();
    return e.line();
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return -1;
}

TEST(Config, ParsesEveryField) {
  const RunConfig c = parse_config(kFull, "full.yaml");
  EXPECT_EQ(c.source, "full.yaml");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.scenario.rng_seed, noise_seed(42));
  EXPECT_EQ(c.scenario.num_samples(), 200000u);
  EXPECT_DOUBLE_EQ(c.scenario.noise_power, 0.01);
  EXPECT_EQ(c.scenario.delay_mode, DelayMode::linear);
  EXPECT_EQ(c.scenario.geometry.num_antennas, 4);
  EXPECT_DOUBLE_EQ(c.scenario.geometry.spacing_m, 1.0);  // half wavelength by default
  EXPECT_EQ(c.scenario.direct_path_amplitude, cd(0.5, 0.5));
  EXPECT_DOUBLE_EQ(c.processing.direct_path_angle_deg, 80.0);
  ASSERT_EQ(c.scenario.clutter.size(), 1u);
  EXPECT_EQ(c.scenario.clutter[0].amplitude, cd(0.2, 0.0));
  ASSERT_EQ(c.scenario.targets.size(), 1u);
  EXPECT_EQ(c.scenario.targets[0].delay_samples, 40);
  EXPECT_DOUBLE_EQ(c.scenario.targets[0].doppler_hz, -12.5);
  EXPECT_EQ(c.scenario.targets[0].amplitude, cd(0.0, 0.1));
  EXPECT_DOUBLE_EQ(c.illuminator.freq_deviation_hz, 50000.0);
  EXPECT_DOUBLE_EQ(c.illuminator.shape.tilt_exponent, 1.0);
  EXPECT_EQ(c.processing.canceller, Canceller::eca);
  EXPECT_EQ(c.processing.meca_q_bar, 20);
  EXPECT_EQ(c.processing.eca_p, 3);
  EXPECT_DOUBLE_EQ(c.processing.eca_window_s, 0.25);
  EXPECT_FALSE(c.processing.joint_projection);
  EXPECT_EQ(c.processing.ls.route, LsRoute::structured);
  EXPECT_DOUBLE_EQ(c.processing.ls.gram_rank_tolerance, 1e-10);
  EXPECT_EQ(c.detector.max_delay, 64);
  EXPECT_EQ(c.detector.strong_window, StrongTargetWindow::windowed);
  EXPECT_EQ(c.detector.summation, AntennaSummation::coherent);
  EXPECT_EQ(c.detector.max_passes, 3);
  EXPECT_EQ(c.compare.delays, (std::vector<int>{3, 5}));
  EXPECT_DOUBLE_EQ(c.compare.sidelobe_span_hz, 20.0);
  EXPECT_EQ(c.aaf.max_delay, 50);
  EXPECT_EQ(c.aaf.guard_delay, 4);
}

TEST(Config, EmptyDocumentGivesDefaults) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c.processing.canceller, Canceller::meca);
  EXPECT_EQ(c.processing.meca_q_bar, 50);
  EXPECT_DOUBLE_EQ(c.processing.eca_window_s, 0.99);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("seed: 1\nbogus: 2\n"), 2);
  EXPECT_EQ(error_line("scenario:\n  sample_rate: 400000\n  noise_powr: 1\n"), 3);
  EXPECT_EQ(error_line("scenario:\n  geometry:\n    num_antennas: many\n"), 3);
  EXPECT_EQ(error_line("processing:\n  canceller: lms\n"), 2);
  EXPECT_EQ(error_line("scenario:\n  targets:\n    - {doppler_hz: 3}\n"), 3);
  EXPECT_EQ(error_line("scenario:\n  geometry:\n    num_antennas: 2\n    spacing_m: 0.9\n"), 3);
  EXPECT_EQ(error_line("detector:\n  max_passes: 0\n"), 2);
  EXPECT_EQ(error_line("seed: 1\nscenario: [1, 2\n"), 3);
  EXPECT_EQ(error_line("compare:\n  delays: [1, -2]\n"), 2);
  EXPECT_EQ(error_line("seed: -4\n"), 1);
}

TEST(Config, MissingFile) {
  try {
    load_config("/nonexistent/run.yaml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 0);
  }
}

TEST(Config, SeedsAndCanceller) {
  RunConfig c;
  apply_seed(c, 7);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.scenario.rng_seed, noise_seed(7));
  EXPECT_NE(noise_seed(7), 7u);
  EXPECT_NE(noise_seed(7), noise_seed(8));
  EXPECT_EQ(parse_canceller("eca"), Canceller::eca);
  EXPECT_THROW(parse_canceller("ECA-ish"), std::invalid_argument);
  EXPECT_EQ(canceller_name(Canceller::meca), "MECA");
}

TEST(Config, EcaWindow) {
  ProcessingConfig p;
  const EcaConfig e = eca_config(p, 400000, 400e3);
  EXPECT_EQ(e.R, 4001);
  EXPECT_EQ(e.Q, 50);
  EXPECT_EQ(eca_window_rows(400000, e), 396000u);
  p.eca_window_s = 1.0;
  EXPECT_EQ(eca_config(p, 400000, 400e3).R, 1);
  p.eca_window_s = 1.5;
  EXPECT_THROW(eca_config(p, 400000, 400e3), std::invalid_argument);
  p.eca_window_s = 0.1234567;
  EXPECT_THROW(eca_config(p, 400000, 400e3), std::invalid_argument);
}

}  // namespace
}  // namespace pbr
