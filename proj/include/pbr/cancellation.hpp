#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pbr/beamform.hpp"
#include "pbr/scenario.hpp"

namespace pbr {

struct Detection;

struct EcaConfig {
  int Q = 50;  ///< delay taps
  int P = 2;   ///< one-sided Doppler bins
  /// Additional reference samples consumed; the data window keeps
  /// L_T - R + 1 rows. 4001 gives a 0.99 s window at 400 kHz.
  int R = 4001;

  void validate() const;
};

/// Rows of the ECA data window for an L_T-sample record.
std::size_t eca_window_rows(std::size_t total_rows, const EcaConfig& cfg);

enum class DictionaryKind { eca, meca, strong_target };

/// Delay window for strong-target dictionaries. `literal` spans shifts
/// 0 .. r_k + r_0; `windowed` keeps r_k - r_0 .. r_k + r_0.
enum class StrongTargetWindow { literal, windowed };

/// One dictionary column: y[t] = e[t + row_offset - delay] * exp(j 2 pi f t / fs)
/// for t in [0, rows), where e is the reference read circularly or with zero
/// fill outside its support.
struct DictionaryAtom {
  int delay = 0;
  double doppler_hz = 0.0;
};

/// Delay/Doppler-shifted copies of a reference signal. Columns are described
/// by `atoms` and generated on demand; at full scale the explicit matrix
/// would not fit in memory.
struct Dictionary {
  DictionaryKind kind = DictionaryKind::meca;
  Eigen::VectorXcd reference;
  double sample_rate = 0.0;
  std::size_t rows = 0;
  std::size_t row_offset = 0;
  DelayMode delay_mode = DelayMode::circular;
  std::vector<DictionaryAtom> atoms;
  std::vector<int> delay_bins;       ///< distinct delays, ascending
  std::vector<double> doppler_bins;  ///< distinct Doppler values (Hz), ascending

  [[nodiscard]] std::size_t cols() const { return atoms.size(); }
  [[nodiscard]] Eigen::VectorXcd column(std::size_t k) const;
  /// Dense rows x cols matrix. Intended for small problems and tests.
  [[nodiscard]] Eigen::MatrixXcd materialize() const;
};

Dictionary build_eca_dictionary(const DirectPathEstimate& s_dp, const EcaConfig& cfg,
                                std::size_t data_rows);

/// L_T x q_bar circulant block: column q is s_dp circularly delayed by q.
Eigen::MatrixXcd build_meca_reference(const DirectPathEstimate& s_dp, int q_bar);

Dictionary build_meca_dictionary(const DirectPathEstimate& s_dp, int q_bar, int p);

/// Concatenates, per detection, circular delay taps and 2 f_0 + 1 Doppler
/// blocks centred on the detection's Doppler rounded to `doppler_step_hz`.
Dictionary build_strong_target_dictionary(const DirectPathEstimate& s_dp,
                                          std::span<const Detection> detections, int r0, int f0,
                                          double doppler_step_hz,
                                          StrongTargetWindow window = StrongTargetWindow::literal);

/// Columns of `base` followed by those of `extra`. Both must describe the
/// same reference window.
Dictionary join_dictionaries(const Dictionary& base, const Dictionary& extra);

enum class LsRoute {
  automatic,   ///< dense when the explicit matrix is small, structured otherwise
  dense,       ///< column-pivoted QR of the materialised dictionary
  structured,  ///< FFT-built Gram matrix, pivoted Cholesky of the Gram, one refinement step
};

struct LsOptions {
  LsRoute route = LsRoute::automatic;
  /// Gram pivots below this fraction of the largest count as dependent
  /// columns; the dense route applies its square root to the QR pivots.
  double gram_rank_tolerance = 1e-12;
  /// Largest rows * cols handled densely by the automatic route.
  std::size_t dense_limit = std::size_t{1} << 22;
};

struct CancellationResult {
  ArrayData cleaned;
  std::vector<double> input_power_per_antenna;     ///< mean |x|^2
  std::vector<double> residual_power_per_antenna;  ///< mean |x_clean|^2
  Eigen::MatrixXcd weights;                        ///< M x L_A
  std::size_t rank = 0;
  bool rank_deficient = false;
  LsRoute route_used = LsRoute::dense;
  std::string warning;
};

/// cleaned = X - Y W with W minimising ||X - Y W|| per antenna column.
CancellationResult ls_cancel(const ArrayData& x, const Dictionary& y, const LsOptions& opts = {});

/// X_W = P_s X_meca.
ArrayData cancel_strong_targets(const ArrayData& x_meca, const Dictionary& y_s,
                                const LsOptions& opts = {});

/// Copy of `x` without its first `count` rows.
ArrayData drop_leading_rows(const ArrayData& x, std::size_t count);

/// Last `rows` samples of the direct-path estimate.
DirectPathEstimate trailing_samples(const DirectPathEstimate& s_dp, std::size_t rows);

}  // namespace pbr
