#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pbr/range_doppler_map.hpp"
#include "pbr/types.hpp"

namespace pbr {

/// Spectral shape of the synthetic programme material used to drive the FM
/// modulator: white Gaussian noise shaped by a high-pass bass corner, a
/// power-law tilt and an audio-band low-pass.
struct ModulatorShape {
  double highpass_hz = 65.0;
  int highpass_order = 2;
  double lowpass_hz = 15000.0;
  int lowpass_order = 4;
  /// Power spectral density falls as f^-tilt_exponent between the corners.
  double tilt_exponent = 2.0;
};

/// Illuminator defaults; the deviation gives roughly 100 kHz of occupied
/// bandwidth for a unit-peak modulating signal.
struct IlluminatorConfig {
  ModulatorShape shape;
  double freq_deviation_hz = 72000.0;
};

/// Segment-averaged periodogram, peak normalised to 0 dB.
struct Spectrum {
  std::vector<double> frequency_hz;
  std::vector<double> power_db;
  std::size_t segments = 0;
};

struct PslrResult {
  double db = 0.0;
  bool unbounded = false;  ///< no energy outside the guard region
  std::size_t peak_delay_index = 0;
  std::size_t peak_doppler_index = 0;
  std::size_t sidelobe_delay_index = 0;
  std::size_t sidelobe_doppler_index = 0;
  int sidelobe_delay_bin = 0;
  double sidelobe_doppler_hz = 0.0;
};

BasebandSignal synth_modulating_signal(std::uint64_t seed, double duration_s, double sample_rate,
                                       const ModulatorShape& shape = {});

/// Phase-integrating FM modulator:
/// s[n] = exp(j 2 pi f_dev * sum_{k<=n} bb[k] / fs).
ComplexSignal fm_modulate(const BasebandSignal& bb, double freq_deviation_hz);

/// Synthesises the modulating signal and FM-modulates it in one step.
ComplexSignal synth_illuminator(std::uint64_t seed, double duration_s, double sample_rate,
                                const IlluminatorConfig& cfg = {});

inline constexpr std::size_t kSpectrumSegment = 4096;

/// Welch estimate (Hann window, 50 % overlap, 4096-sample segments or the
/// whole record if shorter). Complex input gives a two-sided axis in
/// [-fs/2, fs/2); real input gives the one-sided axis [0, fs/2].
Spectrum power_spectrum(const ComplexSignal& sig);
Spectrum power_spectrum(const BasebandSignal& sig);

/// Width of the smallest symmetric-in-power band [lo, hi] that leaves
/// (1 - fraction) / 2 of the total power on each side.
double occupied_bandwidth(const Spectrum& spec, double fraction = 0.99);

/// Auto-ambiguity over delays 0..max_delay (samples, linear zero fill) and
/// the given Doppler list.
RangeDopplerMap auto_ambiguity(const ComplexSignal& sig, int max_delay,
                               std::span<const double> doppler_hz);

/// Peak-to-sidelobe ratio in dB. Cells within +-guard_delay rows and
/// +-guard_doppler columns of the global peak are excluded.
PslrResult pslr(const RangeDopplerMap& map, std::size_t guard_delay, std::size_t guard_doppler);
inline PslrResult pslr(const RangeDopplerMap& map, std::size_t mainlobe_guard) {
  return pslr(map, mainlobe_guard, mainlobe_guard);
}

}  // namespace pbr
