#include "pbr/signal_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pbr/fft.hpp"

namespace pbr {

BasebandSignal synth_modulating_signal(std::uint64_t seed, double duration_s, double sample_rate,
                                       const ModulatorShape& shape) {
  if (!(duration_s > 0.0) || !(sample_rate > 0.0)) {
    throw std::invalid_argument("synth_modulating_signal: duration and sample rate must be positive");
  }
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  if (n < 2) throw std::invalid_argument("synth_modulating_signal: need at least two samples");
  if (!(shape.highpass_hz > 0.0) || !(shape.lowpass_hz > shape.highpass_hz)) {
    throw std::invalid_argument("synth_modulating_signal: need 0 < highpass < lowpass");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXcd noise(static_cast<Eigen::Index>(n));
  for (auto& v : noise) v = gauss(rng);

  Eigen::VectorXcd spec;
  fft::forward(noise, spec);
  const double df = sample_rate / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = df * static_cast<double>(std::min(k, n - k));
    if (f == 0.0) {
      spec[static_cast<Eigen::Index>(k)] = 0.0;
      continue;
    }
    const double hp_ratio = std::pow(f / shape.highpass_hz, shape.highpass_order);
    const double hp = hp_ratio / std::sqrt(1.0 + hp_ratio * hp_ratio);
    const double lp = 1.0 / std::sqrt(1.0 + std::pow(f / shape.lowpass_hz, 2 * shape.lowpass_order));
    const double tilt = std::pow(f, -0.5 * shape.tilt_exponent);
    spec[static_cast<Eigen::Index>(k)] *= hp * lp * tilt;
  }
  Eigen::VectorXcd shaped;
  fft::inverse(spec, shaped);

  BasebandSignal out;
  out.sample_rate = sample_rate;
  out.samples.resize(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = shaped[static_cast<Eigen::Index>(i)].real();
    peak = std::max(peak, std::abs(out.samples[i]));
  }
  if (peak > 0.0) {
    for (auto& v : out.samples) v /= peak;
  }
  return out;
}

ComplexSignal fm_modulate(const BasebandSignal& bb, double freq_deviation_hz) {
  if (bb.samples.empty() || !(bb.sample_rate > 0.0)) {
    throw std::invalid_argument("fm_modulate: empty signal or invalid sample rate");
  }
  if (!(freq_deviation_hz >= 0.0) || freq_deviation_hz >= 0.5 * bb.sample_rate) {
    throw std::invalid_argument("fm_modulate: frequency deviation must lie in [0, fs/2)");
  }
  ComplexSignal out;
  out.sample_rate = bb.sample_rate;
  out.samples.resize(static_cast<Eigen::Index>(bb.size()));
  const double k = kTwoPi * freq_deviation_hz / bb.sample_rate;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < bb.size(); ++i) {
    cumulative += bb.samples[i];
    // Wrap the phase to keep full precision in sin/cos over long records.
    const double phase = std::remainder(k * cumulative, kTwoPi);
    out.samples[static_cast<Eigen::Index>(i)] = std::polar(1.0, phase);
  }
  return out;
}

ComplexSignal synth_illuminator(std::uint64_t seed, double duration_s, double sample_rate,
                                const IlluminatorConfig& cfg) {
  return fm_modulate(synth_modulating_signal(seed, duration_s, sample_rate, cfg.shape),
                     cfg.freq_deviation_hz);
}

namespace {

// Welch average of |FFT|^2 over Hann-windowed, half-overlapping segments.
// Returns linear power per FFT bin in natural (unshifted) order.
std::vector<double> welch(const Eigen::VectorXcd& x, std::size_t& segments) {
  const auto n = static_cast<std::size_t>(x.size());
  if (n == 0) throw std::invalid_argument("power_spectrum: empty input");
  const std::size_t seg = std::min(n, kSpectrumSegment);
  const std::size_t hop = std::max<std::size_t>(1, seg / 2);

  std::vector<double> window(seg, 1.0);
  if (seg > 1) {
    for (std::size_t i = 0; i < seg; ++i) {
      window[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(seg)));
    }
  }

  std::vector<double> acc(seg, 0.0);
  Eigen::VectorXcd buf(static_cast<Eigen::Index>(seg));
  Eigen::VectorXcd out;
  segments = 0;
  for (std::size_t start = 0; start + seg <= n; start += hop) {
    for (std::size_t i = 0; i < seg; ++i) {
      buf[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(start + i)] * window[i];
    }
    fft::forward(buf, out);
    for (std::size_t i = 0; i < seg; ++i) acc[i] += std::norm(out[static_cast<Eigen::Index>(i)]);
    ++segments;
  }
  return acc;
}

std::vector<double> to_db_peak_normalised(const std::vector<double>& power) {
  const double peak = *std::max_element(power.begin(), power.end());
  std::vector<double> db(power.size());
  for (std::size_t i = 0; i < power.size(); ++i) {
    db[i] = peak > 0.0 ? 10.0 * std::log10(std::max(power[i] / peak, 1e-300)) : 0.0;
  }
  return db;
}

}  // namespace

Spectrum power_spectrum(const ComplexSignal& sig) {
  Spectrum out;
  const auto power = welch(sig.samples, out.segments);
  const std::size_t seg = power.size();
  const double df = sig.sample_rate / static_cast<double>(seg);

  // fftshift so the axis runs from -fs/2 upward.
  std::vector<double> shifted(seg);
  const std::size_t half = seg / 2;
  for (std::size_t i = 0; i < seg; ++i) {
    const std::size_t src = (i + seg - half) % seg;
    shifted[i] = power[src];
    out.frequency_hz.push_back(df * (static_cast<double>(i) - static_cast<double>(half)));
  }
  out.power_db = to_db_peak_normalised(shifted);
  return out;
}

Spectrum power_spectrum(const BasebandSignal& sig) {
  ComplexSignal tmp;
  tmp.sample_rate = sig.sample_rate;
  tmp.samples.resize(static_cast<Eigen::Index>(sig.size()));
  for (std::size_t i = 0; i < sig.size(); ++i) tmp.samples[static_cast<Eigen::Index>(i)] = sig.samples[i];

  Spectrum out;
  const auto power = welch(tmp.samples, out.segments);
  const std::size_t seg = power.size();
  const double df = sig.sample_rate / static_cast<double>(seg);
  std::vector<double> one_sided;
  for (std::size_t k = 0; k <= seg / 2; ++k) {
    double p = power[k];
    // Fold the negative-frequency mirror image; DC and Nyquist are unique.
    if (k != 0 && 2 * k != seg) p += power[seg - k];
    one_sided.push_back(p);
    out.frequency_hz.push_back(df * static_cast<double>(k));
  }
  out.power_db = to_db_peak_normalised(one_sided);
  return out;
}

double occupied_bandwidth(const Spectrum& spec, double fraction) {
  if (spec.power_db.empty()) throw std::invalid_argument("occupied_bandwidth: empty spectrum");
  if (!(fraction > 0.0) || !(fraction < 1.0)) {
    throw std::invalid_argument("occupied_bandwidth: fraction must lie in (0, 1)");
  }
  std::vector<double> lin(spec.power_db.size());
  std::transform(spec.power_db.begin(), spec.power_db.end(), lin.begin(),
                 [](double db) { return std::pow(10.0, db / 10.0); });
  const double total = std::accumulate(lin.begin(), lin.end(), 0.0);
  const double tail = 0.5 * (1.0 - fraction) * total;

  std::size_t lo = 0;
  for (double acc = 0.0; lo < lin.size(); ++lo) {
    acc += lin[lo];
    if (acc > tail) break;
  }
  std::size_t hi = lin.size() - 1;
  for (double acc = 0.0; hi > 0; --hi) {
    acc += lin[hi];
    if (acc > tail) break;
  }
  if (hi < lo) return 0.0;
  const double df = spec.frequency_hz.size() > 1 ? spec.frequency_hz[1] - spec.frequency_hz[0] : 0.0;
  return spec.frequency_hz[hi] - spec.frequency_hz[lo] + df;
}

RangeDopplerMap auto_ambiguity(const ComplexSignal& sig, int max_delay,
                               std::span<const double> doppler_hz) {
  const auto n = static_cast<long>(sig.size());
  if (n == 0) throw std::invalid_argument("auto_ambiguity: empty signal");
  if (max_delay < 0 || max_delay >= n) {
    throw std::invalid_argument("auto_ambiguity: max_delay must lie in [0, sample count)");
  }
  if (doppler_hz.empty()) throw std::invalid_argument("auto_ambiguity: empty Doppler grid");
  for (double f : doppler_hz) {
    if (std::abs(f) > 0.5 * sig.sample_rate) {
      throw std::invalid_argument("auto_ambiguity: Doppler grid exceeds +-fs/2");
    }
  }

  RangeDopplerMap map;
  map.sample_rate = sig.sample_rate;
  map.doppler_hz.assign(doppler_hz.begin(), doppler_hz.end());
  for (int d = 0; d <= max_delay; ++d) map.delay_bins.push_back(d);

  const std::span<const cd> s(sig.samples.data(), sig.size());
  map.values = delay_doppler_correlation(s, s, map.delay_bins, map.doppler_hz, sig.sample_rate,
                                         DelayMode::linear);
  return map;
}

PslrResult pslr(const RangeDopplerMap& map, std::size_t guard_delay, std::size_t guard_doppler) {
  const auto rows = static_cast<std::size_t>(map.values.rows());
  const auto cols = static_cast<std::size_t>(map.values.cols());
  if (rows == 0 || cols == 0) throw std::invalid_argument("pslr: empty map");

  const Eigen::MatrixXd mag = map.magnitude();
  Eigen::Index pr = 0;
  Eigen::Index pc = 0;
  const double peak = mag.maxCoeff(&pr, &pc);

  PslrResult out;
  out.peak_delay_index = static_cast<std::size_t>(pr);
  out.peak_doppler_index = static_cast<std::size_t>(pc);

  const auto inside = [&](std::size_t r, std::size_t c) {
    const auto dr = r > out.peak_delay_index ? r - out.peak_delay_index : out.peak_delay_index - r;
    const auto dc = c > out.peak_doppler_index ? c - out.peak_doppler_index : out.peak_doppler_index - c;
    return dr <= guard_delay && dc <= guard_doppler;
  };

  bool any_outside = false;
  double side = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) {
      if (inside(r, c)) continue;
      const double v = mag(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (!any_outside || v > side) {
        side = v;
        out.sidelobe_delay_index = r;
        out.sidelobe_doppler_index = c;
      }
      any_outside = true;
    }
  }
  if (!any_outside) throw std::invalid_argument("pslr: guard region covers the whole map");

  if (!map.delay_bins.empty()) out.sidelobe_delay_bin = map.delay_bins[out.sidelobe_delay_index];
  if (!map.doppler_hz.empty()) out.sidelobe_doppler_hz = map.doppler_hz[out.sidelobe_doppler_index];
  if (side <= 0.0) {
    out.unbounded = true;
    out.db = std::numeric_limits<double>::infinity();
  } else {
    out.db = 20.0 * std::log10(peak / side);
  }
  return out;
}

}  // namespace pbr
