#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbr/cancellation.hpp"
#include "pbr/detection.hpp"
#include "pbr/scenario.hpp"
#include "pbr/signal_synthesis.hpp"

namespace pbr {

/// Schema or value error in a run configuration. `line` is 1-based, 0 when
/// the location is unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  [[nodiscard]] int line() const { return line_; }

 private:
  int line_ = 0;
};

enum class Canceller { meca, eca };

Canceller parse_canceller(const std::string& name);
std::string canceller_name(Canceller c);

struct ProcessingConfig {
  Canceller canceller = Canceller::meca;
  double direct_path_angle_deg = 90.0;
  int meca_q_bar = 50;
  int meca_p = 2;
  int eca_q = 50;
  int eca_p = 2;
  /// ECA data window; the remaining leading samples only feed the reference.
  double eca_window_s = 0.99;
  /// Strong-target passes also project out the disturbance dictionary (MECA only).
  bool joint_projection = true;
  LsOptions ls;
};

/// ECA parameters for an L_T-sample record under `p`.
EcaConfig eca_config(const ProcessingConfig& p, std::size_t total_rows, double sample_rate);

struct CompareConfig {
  /// Doppler half-width of the sidelobe cells evaluated around each clutter delay.
  double sidelobe_span_hz = 10.0;
  /// Delays evaluated; empty means the scenario's clutter delays.
  std::vector<int> delays;
};

struct AafConfig {
  int max_delay = 100;
  double doppler_span_hz = 200.0;
  int guard_delay = 10;
  int guard_doppler = 10;
};

struct RunConfig {
  std::string source;  ///< file the configuration was read from
  std::uint64_t seed = 0;
  ScenarioConfig scenario;
  IlluminatorConfig illuminator;
  ProcessingConfig processing;
  DetectorConfig detector;
  CompareConfig compare;
  AafConfig aaf;
};

/// Parses YAML text. Unknown keys, wrong types and out-of-range values raise
/// ConfigError with the offending line.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Sets the run seed (illuminator and noise streams derive from it).
void apply_seed(RunConfig& cfg, std::uint64_t seed);

/// Seed of the noise stream for a given run seed, decorrelated from the
/// illuminator stream.
std::uint64_t noise_seed(std::uint64_t seed);

}  // namespace pbr
