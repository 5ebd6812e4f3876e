#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "pbr/beamform.hpp"
#include "pbr/cancellation.hpp"
#include "pbr/range_doppler_map.hpp"
#include "pbr/scenario.hpp"

namespace pbr {

/// One target hypothesis taken from a summed range-Doppler map.
struct Detection {
  std::size_t delay_index = 0;    ///< row in the map
  std::size_t doppler_index = 0;  ///< column in the map
  int range_bin = 0;              ///< bistatic delay, samples
  double range_m = 0.0;
  double doppler_hz = 0.0;
  /// Beamformed complex amplitude relative to the direct path (set together
  /// with the angle).
  cd amplitude{};
  /// Summed-map magnitude relative to the direct path, dB.
  double power_db = 0.0;
  double peak_to_background_db = 0.0;
  double angle_deg = std::numeric_limits<double>::quiet_NaN();
  int pass = 0;  ///< 1-based sequential pass that produced the detection
};

enum class AntennaSummation {
  incoherent,  ///< sum of per-antenna magnitudes
  coherent,    ///< complex sum across antennas
};

struct DetectorConfig {
  int max_delay = 128;             ///< delay bins 0..max_delay
  double doppler_span_hz = 200.0;  ///< Doppler grid covers +-span at 1/T resolution
  double threshold_db = 13.0;      ///< over the map's median magnitude
  int guard_delay = 5;
  int guard_doppler = 5;
  /// Peaks more than this far below the strongest cell wait for a later pass.
  double dynamic_range_db = 10.0;
  int max_passes = 4;
  int r0 = 3;
  int f0 = 3;
  StrongTargetWindow strong_window = StrongTargetWindow::literal;
  AntennaSummation summation = AntennaSummation::incoherent;
  DelayMode delay_mode = DelayMode::circular;
  double angle_step_deg = 0.5;

  void validate() const;
};

struct CrossAmbiguity {
  std::vector<RangeDopplerMap> per_antenna;
  RangeDopplerMap summed;
};

/// Per-antenna 2D-CCF against the direct-path estimate plus the map summed
/// across antennas.
CrossAmbiguity cross_ambiguity(const ArrayData& x, const DirectPathEstimate& s_dp,
                               const DetectorConfig& cfg);

/// Summed-map magnitude of a unit-amplitude echo: L_A * ||s_dp|| * sqrt(N).
/// Detection powers and exported maps are expressed relative to it.
double echo_scale(const DirectPathEstimate& s_dp, std::size_t antennas);

/// Local maxima of |map| above the median-relative threshold, greedy guard
/// suppression, strongest first.
std::vector<Detection> detect_peaks(const RangeDopplerMap& map, const DetectorConfig& cfg);

struct SequentialResult {
  std::vector<Detection> detections;
  bool truncated = false;      ///< stopped by max_passes with peaks still present
  ArrayData residual;          ///< data after the last strong-target projection
  std::vector<RangeDopplerMap> summed_maps;  ///< one per CCF evaluation
  std::vector<std::string> warnings;
};

/// CCF, detect, estimate angles, project the detections out and repeat
/// until a pass finds nothing or max_passes is reached.
///
/// With `disturbance` null each pass applies X_W = P_s X to the current data.
/// Otherwise every pass projects onto the complement of the disturbance
/// dictionary joined with all strong-target columns found so far, which
/// keeps the data orthogonal to the clutter subspace (a lone P_s would
/// reintroduce the component of each strong echo that MECA removed).
SequentialResult sequential_detect(const ArrayData& x_meca, const DirectPathEstimate& s_dp,
                                   const DetectorConfig& cfg, const LsOptions& ls = {},
                                   const Dictionary* disturbance = nullptr);

}  // namespace pbr
