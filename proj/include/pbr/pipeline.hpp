#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pbr/config.hpp"

namespace pbr {

/// Wall-clock duration of named stages, in milliseconds.
class StageTimer {
 public:
  template <typename Fn>
  decltype(auto) run(const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    struct Record {
      StageTimer& timer;
      const std::string& name;
      std::chrono::steady_clock::time_point start;
      ~Record() {
        const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - start;
        timer.stages_.emplace_back(name, dt.count());
      }
    } record{*this, name, start};
    return fn();
  }

  [[nodiscard]] const std::vector<std::pair<std::string, double>>& stages() const { return stages_; }

 private:
  std::vector<std::pair<std::string, double>> stages_;
};

struct Simulation {
  BasebandSignal modulating;
  ComplexSignal illuminator;
  ArrayData array;
};

Simulation simulate(const RunConfig& cfg, StageTimer* timer = nullptr);

/// Same noise realisation as simulate() with the direct path, clutter and
/// targets removed.
ArrayData simulate_noise_only(const RunConfig& cfg, const ComplexSignal& illuminator);

struct ProcessResult {
  Canceller canceller = Canceller::meca;
  /// Reference over the processed window (the trailing ECA window for ECA).
  DirectPathEstimate reference;
  CancellationResult disturbance;
  SequentialResult detection;
};

/// Direct-path estimate, disturbance cancellation, sequential detection and
/// angle estimation.
ProcessResult process(const ArrayData& x, const RunConfig& cfg, StageTimer* timer = nullptr);

/// Mean CCF power per unit reference energy, |xi|^2 / ||ref||^2, averaged
/// over antennas and cells, in dB. Cells sit at `delays` and Doppler
/// multiples k * bin_hz: |k| <= p for the clutter cells, p < |k| <= sidelobe
/// span for the sidelobe cells.
struct ResidualCells {
  double clutter_db = 0.0;
  double sidelobe_db = 0.0;
};

ResidualCells residual_at_cells(const ArrayData& x, const ComplexSignal& ref, std::span<const int> delays,
                                int p, double sidelobe_span_hz, double bin_hz, DelayMode mode);

struct CancellerScore {
  Canceller canceller = Canceller::meca;
  ResidualCells residual;
  double runtime_ms = 0.0;
};

struct CompareReport {
  std::vector<CancellerScore> rows;  ///< ECA then MECA
  std::optional<ResidualCells> noise_floor;
  std::vector<int> delays;
};

/// Runs both cancellers on `x` and scores the residual around the clutter
/// delays. The floor, when `noise_only` is given, is the uncancelled noise
/// record evaluated on the same cells against the MECA reference.
CompareReport compare_cancellers(const ArrayData& x, const RunConfig& cfg, const ArrayData* noise_only);

struct AafReport {
  RangeDopplerMap map;
  PslrResult pslr;
  double energy = 0.0;
  Spectrum spectrum;
  double occupied_bandwidth_hz = 0.0;
  std::optional<Spectrum> modulating_spectrum;
};

AafReport analyse_aaf(const ComplexSignal& s, const AafConfig& cfg, const BasebandSignal* modulating = nullptr);

struct TruthMatch {
  TargetParam truth;
  std::optional<Detection> detection;  ///< nearest detection in delay/Doppler
  bool within_tolerance = false;
};

/// Pairs each true target with its nearest detection. Tolerances apply to
/// range bins, Hz and degrees.
std::vector<TruthMatch> match_truth(std::span<const TargetParam> truth, std::span<const Detection> detections,
                                    int range_tol = 1, double doppler_tol_hz = 1.0, double angle_tol_deg = 1.0);

}  // namespace pbr
