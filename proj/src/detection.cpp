#include "pbr/detection.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace pbr {
namespace {

double median_of(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

double echo_scale(const DirectPathEstimate& s_dp, std::size_t antennas) {
  return static_cast<double>(antennas) * s_dp.signal.samples.norm() *
         std::sqrt(static_cast<double>(s_dp.signal.size()));
}

void DetectorConfig::validate() const {
  if (max_delay < 0) throw std::invalid_argument("detector: max_delay must be >= 0");
  if (!(doppler_span_hz >= 0.0)) throw std::invalid_argument("detector: Doppler span must be >= 0");
  if (!(threshold_db > 0.0)) throw std::invalid_argument("detector: threshold must be positive");
  if (guard_delay < 0 || guard_doppler < 0) throw std::invalid_argument("detector: guard cells must be >= 0");
  if (!(dynamic_range_db > 0.0)) throw std::invalid_argument("detector: dynamic range must be positive");
  if (max_passes < 1) throw std::invalid_argument("detector: max_passes must be >= 1");
  if (r0 < 0 || f0 < 0) throw std::invalid_argument("detector: r0 and f0 must be >= 0");
  if (!(angle_step_deg > 0.0)) throw std::invalid_argument("detector: angle step must be positive");
}

CrossAmbiguity cross_ambiguity(const ArrayData& x, const DirectPathEstimate& s_dp,
                               const DetectorConfig& cfg) {
  cfg.validate();
  const std::size_t n = x.rows();
  if (n == 0 || x.antennas() == 0) throw std::invalid_argument("cross_ambiguity: empty array data");
  if (s_dp.signal.size() != n) {
    throw std::invalid_argument("cross_ambiguity: reference length differs from data rows");
  }
  if (static_cast<std::size_t>(cfg.max_delay) >= n) {
    throw std::invalid_argument("cross_ambiguity: max_delay must be below the window length");
  }
  if (cfg.doppler_span_hz > 0.5 * x.sample_rate) {
    throw std::invalid_argument("cross_ambiguity: Doppler span exceeds fs/2");
  }

  RangeDopplerMap axes;
  axes.sample_rate = x.sample_rate;
  axes.doppler_hz = doppler_grid(cfg.doppler_span_hz, x.sample_rate / static_cast<double>(n));
  for (int d = 0; d <= cfg.max_delay; ++d) axes.delay_bins.push_back(d);

  CrossAmbiguity out;
  out.summed = axes;
  out.summed.values = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(axes.num_delays()),
                                             static_cast<Eigen::Index>(axes.num_dopplers()));
  const std::span<const cd> ref(s_dp.signal.samples.data(), n);
  for (Eigen::Index l = 0; l < x.matrix.cols(); ++l) {
    RangeDopplerMap m = axes;
    m.values = delay_doppler_correlation(std::span<const cd>(x.matrix.col(l).data(), n), ref,
                                         m.delay_bins, m.doppler_hz, x.sample_rate, cfg.delay_mode);
    if (cfg.summation == AntennaSummation::incoherent) {
      out.summed.values += m.values.cwiseAbs().cast<cd>();
    } else {
      out.summed.values += m.values;
    }
    out.per_antenna.push_back(std::move(m));
  }
  return out;
}

std::vector<Detection> detect_peaks(const RangeDopplerMap& map, const DetectorConfig& cfg) {
  cfg.validate();
  map.validate();
  const Eigen::MatrixXd mag = map.magnitude();
  const Eigen::Index rows = mag.rows();
  const Eigen::Index cols = mag.cols();
  if (rows == 0 || cols == 0) throw std::invalid_argument("detect_peaks: empty map");

  const double peak = mag.maxCoeff();
  if (!(peak > 0.0)) return {};
  const double background = median_of(std::vector<double>(mag.data(), mag.data() + mag.size()));
  const double floor_ratio = std::pow(10.0, cfg.threshold_db / 20.0);
  const double range_floor = peak * std::pow(10.0, -cfg.dynamic_range_db / 20.0);

  struct Candidate {
    Eigen::Index r;
    Eigen::Index c;
    double v;
  };
  std::vector<Candidate> candidates;
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double v = mag(r, c);
      if (v < range_floor || v < background * floor_ratio) continue;
      bool local_max = true;
      for (Eigen::Index dc = -1; dc <= 1 && local_max; ++dc) {
        for (Eigen::Index dr = -1; dr <= 1; ++dr) {
          const Eigen::Index rr = r + dr;
          const Eigen::Index cc = c + dc;
          if ((dr == 0 && dc == 0) || rr < 0 || cc < 0 || rr >= rows || cc >= cols) continue;
          if (mag(rr, cc) > v) {
            local_max = false;
            break;
          }
        }
      }
      if (local_max) candidates.push_back({r, c, v});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.v > b.v; });

  std::vector<Detection> out;
  for (const auto& cand : candidates) {
    const bool guarded = std::any_of(out.begin(), out.end(), [&](const Detection& d) {
      return std::abs(static_cast<long>(d.delay_index) - cand.r) <= cfg.guard_delay &&
             std::abs(static_cast<long>(d.doppler_index) - cand.c) <= cfg.guard_doppler;
    });
    if (guarded) continue;
    Detection det;
    det.delay_index = static_cast<std::size_t>(cand.r);
    det.doppler_index = static_cast<std::size_t>(cand.c);
    det.range_bin = map.delay_bins[det.delay_index];
    det.range_m = det.range_bin * map.meters_per_bin();
    det.doppler_hz = map.doppler_hz[det.doppler_index];
    det.peak_to_background_db = background > 0.0 ? 20.0 * std::log10(cand.v / background)
                                                  : std::numeric_limits<double>::infinity();
    out.push_back(det);
  }
  return out;
}

SequentialResult sequential_detect(const ArrayData& x_meca, const DirectPathEstimate& s_dp,
                                   const DetectorConfig& cfg, const LsOptions& ls,
                                   const Dictionary* disturbance) {
  cfg.validate();
  const std::vector<double> grid = default_angle_grid(cfg.angle_step_deg);
  const double scale = echo_scale(s_dp, x_meca.antennas());
  const double doppler_step = x_meca.sample_rate / static_cast<double>(x_meca.rows());

  SequentialResult out;
  out.residual = x_meca;
  std::optional<Dictionary> joint;
  if (disturbance != nullptr) joint = *disturbance;
  for (int pass = 1;; ++pass) {
    const CrossAmbiguity ccf = cross_ambiguity(out.residual, s_dp, cfg);
    std::vector<Detection> found = detect_peaks(ccf.summed, cfg);
    out.summed_maps.push_back(ccf.summed);
    if (found.empty()) break;

    for (auto& det : found) {
      det.pass = pass;
      const cd v = ccf.summed.values(static_cast<Eigen::Index>(det.delay_index),
                                     static_cast<Eigen::Index>(det.doppler_index));
      det.power_db = scale > 0.0 ? 20.0 * std::log10(std::abs(v) / scale) : 0.0;
      const Eigen::VectorXcd z = extract_snapshot(ccf.per_antenna, det);
      det.angle_deg = estimate_angle(angle_spectrum(z, out.residual.geometry, grid));
      if (scale > 0.0) det.amplitude = steering_vector(out.residual.geometry, det.angle_deg).dot(z) / scale;
    }
    out.detections.insert(out.detections.end(), found.begin(), found.end());

    if (pass == cfg.max_passes) {
      out.truncated = true;
      break;
    }
    const Dictionary y_s = build_strong_target_dictionary(s_dp, found, cfg.r0, cfg.f0, doppler_step,
                                                          cfg.strong_window);
    CancellationResult res;
    if (joint) {
      joint = join_dictionaries(*joint, y_s);
      res = ls_cancel(x_meca, *joint, ls);
    } else {
      res = ls_cancel(out.residual, y_s, ls);
    }
    if (!res.warning.empty()) out.warnings.push_back("pass " + std::to_string(pass) + ": " + res.warning);
    out.residual = std::move(res.cleaned);
  }
  return out;
}

}  // namespace pbr
