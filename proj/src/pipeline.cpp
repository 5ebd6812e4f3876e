#include "pbr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace pbr {
namespace {

template <typename Fn>
decltype(auto) timed(StageTimer* timer, const std::string& name, Fn&& fn) {
  if (timer == nullptr) return fn();
  return timer->run(name, std::forward<Fn>(fn));
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

void check_array(const ArrayData& x, const RunConfig& cfg) {
  if (x.rows() == 0 || x.antennas() == 0) throw std::invalid_argument("array data is empty");
  if (x.antennas() != static_cast<std::size_t>(x.geometry.num_antennas)) {
    throw std::invalid_argument("array data has " + std::to_string(x.antennas()) +
                                " columns but the geometry declares " +
                                std::to_string(x.geometry.num_antennas) + " antennas");
  }
  if (x.sample_rate != cfg.scenario.sample_rate) {
    throw std::invalid_argument("array sample rate differs from the configured sample rate");
  }
}

}  // namespace

Simulation simulate(const RunConfig& cfg, StageTimer* timer) {
  cfg.scenario.validate();
  Simulation out;
  timed(timer, "synthesize", [&] {
    out.modulating = synth_modulating_signal(cfg.seed, cfg.scenario.duration_s, cfg.scenario.sample_rate,
                                             cfg.illuminator.shape);
    out.illuminator = fm_modulate(out.modulating, cfg.illuminator.freq_deviation_hz);
  });
  timed(timer, "simulate", [&] { out.array = simulate_array_data(cfg.scenario, out.illuminator); });
  return out;
}

ArrayData simulate_noise_only(const RunConfig& cfg, const ComplexSignal& illuminator) {
  ScenarioConfig s = cfg.scenario;
  s.direct_path_amplitude = cd{};
  s.clutter.clear();
  s.targets.clear();
  return simulate_array_data(s, illuminator);
}

ProcessResult process(const ArrayData& x, const RunConfig& cfg, StageTimer* timer) {
  check_array(x, cfg);
  const ProcessingConfig& p = cfg.processing;
  ProcessResult out;
  out.canceller = p.canceller;
  const DirectPathEstimate s_dp =
      timed(timer, "direct_path", [&] { return estimate_direct_path(x, p.direct_path_angle_deg); });

  if (p.canceller == Canceller::meca) {
    const Dictionary y = build_meca_dictionary(s_dp, p.meca_q_bar, p.meca_p);
    out.disturbance = timed(timer, "cancel", [&] { return ls_cancel(x, y, p.ls); });
    out.reference = s_dp;
    out.detection = timed(timer, "detect", [&] {
      return sequential_detect(out.disturbance.cleaned, s_dp, cfg.detector, p.ls,
                               p.joint_projection ? &y : nullptr);
    });
  } else {
    const EcaConfig e = eca_config(p, x.rows(), x.sample_rate);
    const std::size_t rows = eca_window_rows(x.rows(), e);
    const Dictionary y = build_eca_dictionary(s_dp, e, rows);
    out.disturbance = timed(timer, "cancel", [&] {
      return ls_cancel(drop_leading_rows(x, static_cast<std::size_t>(e.R - 1)), y, p.ls);
    });
    out.reference = trailing_samples(s_dp, rows);
    out.detection = timed(timer, "detect", [&] {
      return sequential_detect(out.disturbance.cleaned, out.reference, cfg.detector, p.ls);
    });
  }
  return out;
}

ResidualCells residual_at_cells(const ArrayData& x, const ComplexSignal& ref, std::span<const int> delays,
                                int p, double sidelobe_span_hz, double bin_hz, DelayMode mode) {
  if (delays.empty()) throw std::invalid_argument("residual_at_cells: no delays");
  if (p < 0) throw std::invalid_argument("residual_at_cells: p must be >= 0");
  if (!(bin_hz > 0.0)) throw std::invalid_argument("residual_at_cells: bin width must be positive");
  if (ref.size() != x.rows()) throw std::invalid_argument("residual_at_cells: reference length differs from data");
  const double energy = ref.samples.squaredNorm();
  if (!(energy > 0.0)) throw std::invalid_argument("residual_at_cells: reference has no energy");
  for (int d : delays) {
    if (d < 0 || static_cast<std::size_t>(d) >= x.rows()) {
      throw std::invalid_argument("residual_at_cells: delay outside the window");
    }
  }

  const int k_side = std::max(p, static_cast<int>(std::floor(sidelobe_span_hz / bin_hz + 1e-9)));
  std::vector<double> doppler;
  for (int k = -k_side; k <= k_side; ++k) doppler.push_back(k * bin_hz);

  double clutter = 0.0;
  double side = 0.0;
  std::size_t n_clutter = 0;
  std::size_t n_side = 0;
  const std::span<const cd> r(ref.samples.data(), ref.size());
  for (Eigen::Index l = 0; l < x.matrix.cols(); ++l) {
    const Eigen::MatrixXcd m = delay_doppler_correlation(std::span<const cd>(x.matrix.col(l).data(), x.rows()), r,
                                                         delays, doppler, x.sample_rate, mode);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const bool inner = std::abs(static_cast<int>(c) - k_side) <= p;
      for (Eigen::Index row = 0; row < m.rows(); ++row) {
        const double v = std::norm(m(row, c)) / energy;
        if (inner) {
          clutter += v;
          ++n_clutter;
        } else {
          side += v;
          ++n_side;
        }
      }
    }
  }
  ResidualCells out;
  out.clutter_db = 10.0 * std::log10(clutter / static_cast<double>(n_clutter));
  out.sidelobe_db = n_side > 0 ? 10.0 * std::log10(side / static_cast<double>(n_side))
                               : std::numeric_limits<double>::quiet_NaN();
  return out;
}

CompareReport compare_cancellers(const ArrayData& x, const RunConfig& cfg, const ArrayData* noise_only) {
  check_array(x, cfg);
  const ProcessingConfig& p = cfg.processing;
  CompareReport out;
  if (!cfg.compare.delays.empty()) {
    out.delays = cfg.compare.delays;
  } else {
    std::set<int> unique;
    for (const auto& c : cfg.scenario.clutter) unique.insert(c.delay_samples);
    out.delays.assign(unique.begin(), unique.end());
  }
  if (out.delays.empty()) {
    throw std::invalid_argument("compare-cancellers: the scenario has no clutter; list compare.delays");
  }
  const double bin_hz = x.sample_rate / static_cast<double>(x.rows());
  const int cells_p = std::max(p.meca_p, p.eca_p);
  const double span = cfg.compare.sidelobe_span_hz;
  const DirectPathEstimate s_dp = estimate_direct_path(x, p.direct_path_angle_deg);

  {
    const auto start = std::chrono::steady_clock::now();
    const EcaConfig e = eca_config(p, x.rows(), x.sample_rate);
    const std::size_t rows = eca_window_rows(x.rows(), e);
    const Dictionary y = build_eca_dictionary(s_dp, e, rows);
    const CancellationResult r = ls_cancel(drop_leading_rows(x, static_cast<std::size_t>(e.R - 1)), y, p.ls);
    CancellerScore score;
    score.canceller = Canceller::eca;
    score.runtime_ms = elapsed_ms(start);
    const DirectPathEstimate ref = trailing_samples(s_dp, rows);
    score.residual = residual_at_cells(r.cleaned, ref.signal, out.delays, cells_p, span, bin_hz, DelayMode::linear);
    out.rows.push_back(score);
  }
  {
    const auto start = std::chrono::steady_clock::now();
    const Dictionary y = build_meca_dictionary(s_dp, p.meca_q_bar, p.meca_p);
    const CancellationResult r = ls_cancel(x, y, p.ls);
    CancellerScore score;
    score.canceller = Canceller::meca;
    score.runtime_ms = elapsed_ms(start);
    score.residual = residual_at_cells(r.cleaned, s_dp.signal, out.delays, cells_p, span, bin_hz, DelayMode::circular);
    out.rows.push_back(score);
  }
  if (noise_only != nullptr) {
    if (noise_only->rows() != x.rows() || noise_only->antennas() != x.antennas()) {
      throw std::invalid_argument("compare-cancellers: noise-only record has a different shape");
    }
    out.noise_floor =
        residual_at_cells(*noise_only, s_dp.signal, out.delays, cells_p, span, bin_hz, DelayMode::circular);
  }
  return out;
}

AafReport analyse_aaf(const ComplexSignal& s, const AafConfig& cfg, const BasebandSignal* modulating) {
  if (s.size() == 0) throw std::invalid_argument("aaf: empty signal");
  AafReport out;
  const std::vector<double> grid = doppler_grid(cfg.doppler_span_hz, s.sample_rate / static_cast<double>(s.size()));
  out.map = auto_ambiguity(s, cfg.max_delay, grid);
  out.pslr = pslr(out.map, static_cast<std::size_t>(cfg.guard_delay), static_cast<std::size_t>(cfg.guard_doppler));
  out.energy = s.samples.squaredNorm();
  out.spectrum = power_spectrum(s);
  out.occupied_bandwidth_hz = occupied_bandwidth(out.spectrum);
  if (modulating != nullptr) out.modulating_spectrum = power_spectrum(*modulating);
  return out;
}

std::vector<TruthMatch> match_truth(std::span<const TargetParam> truth, std::span<const Detection> detections,
                                    int range_tol, double doppler_tol_hz, double angle_tol_deg) {
  std::vector<TruthMatch> out;
  for (const auto& t : truth) {
    TruthMatch m;
    m.truth = t;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& d : detections) {
      const double dist = std::abs(d.range_bin - t.delay_samples) + std::abs(d.doppler_hz - t.doppler_hz);
      if (dist < best) {
        best = dist;
        m.detection = d;
      }
    }
    if (m.detection) {
      const Detection& d = *m.detection;
      m.within_tolerance = std::abs(d.range_bin - t.delay_samples) <= range_tol &&
                           std::abs(d.doppler_hz - t.doppler_hz) <= doppler_tol_hz &&
                           std::abs(d.angle_deg - t.angle_deg) <= angle_tol_deg;
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace pbr
