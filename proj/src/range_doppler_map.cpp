#include "pbr/range_doppler_map.hpp"

#include <algorithm>
#include <cmath>

#include "pbr/fft.hpp"

namespace pbr {

std::size_t samples_in_window(double duration_s, double sample_rate) {
  if (!(duration_s > 0.0) || !(sample_rate > 0.0)) {
    throw std::invalid_argument("duration and sample rate must be positive");
  }
  const double exact = duration_s * sample_rate;
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-6 * std::max(1.0, exact)) {
    throw std::invalid_argument("duration x sample_rate is not an integer sample count");
  }
  return static_cast<std::size_t>(rounded);
}

std::optional<std::size_t> RangeDopplerMap::delay_index(int bin) const {
  for (std::size_t i = 0; i < delay_bins.size(); ++i) {
    if (delay_bins[i] == bin) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> RangeDopplerMap::doppler_index(double hz, double tol_hz) const {
  for (std::size_t i = 0; i < doppler_hz.size(); ++i) {
    if (std::abs(doppler_hz[i] - hz) <= tol_hz) return i;
  }
  return std::nullopt;
}

void RangeDopplerMap::validate() const {
  if (static_cast<std::size_t>(values.rows()) != delay_bins.size() ||
      static_cast<std::size_t>(values.cols()) != doppler_hz.size()) {
    throw std::invalid_argument("range-Doppler map: axes do not match value dimensions");
  }
  for (std::size_t i = 1; i < delay_bins.size(); ++i) {
    if (delay_bins[i] <= delay_bins[i - 1]) {
      throw std::invalid_argument("range-Doppler map: delay axis not strictly increasing");
    }
  }
  for (std::size_t i = 1; i < doppler_hz.size(); ++i) {
    if (doppler_hz[i] <= doppler_hz[i - 1]) {
      throw std::invalid_argument("range-Doppler map: Doppler axis not strictly increasing");
    }
  }
}

std::vector<double> doppler_grid(double span_hz, double resolution_hz) {
  if (!(span_hz >= 0.0) || !(resolution_hz > 0.0)) {
    throw std::invalid_argument("doppler_grid: span must be >= 0 and resolution > 0");
  }
  const auto k_max = static_cast<long>(std::floor(span_hz / resolution_hz + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(2 * k_max + 1));
  for (long k = -k_max; k <= k_max; ++k) grid.push_back(static_cast<double>(k) * resolution_hz);
  return grid;
}

namespace {

// Evaluates selected bins of the length-n DFT of a sequence. When the bins
// fit in a window much narrower than n, the DFT is split into d = n / m
// interleaved length-m transforms,
//   P[k] = sum_{r<d} exp(-j 2 pi k r / n) * DFT_m(p[r], p[r + d], ...)[k mod m],
// and only the requested bins are combined.
class BinEvaluator {
 public:
  BinEvaluator(std::size_t n, std::vector<long> bins) : bins_(std::move(bins)) {
    if (bins_.empty()) return;
    const auto nl = static_cast<long>(n);
    long lo = nl;
    long hi = -nl;
    for (long b : bins_) {
      const long k = b > nl / 2 ? b - nl : b;
      lo = std::min(lo, k);
      hi = std::max(hi, k);
    }
    const auto width = static_cast<std::size_t>(hi - lo + 1);
    for (std::size_t m = width; 16 * m <= n; ++m) {
      if (n % m == 0) {
        m_ = m;
        break;
      }
    }
    if (m_ == 0) return;
    d_ = n / m_;
    const std::size_t nb = bins_.size();
    twiddle_.resize(d_ * nb);
    for (std::size_t r = 0; r < d_; ++r) {
      for (std::size_t j = 0; j < nb; ++j) {
        const auto kr = static_cast<long long>(bins_[j]) * static_cast<long long>(r) % nl;
        twiddle_[r * nb + j] = std::polar(1.0, -kTwoPi * static_cast<double>(kr) / static_cast<double>(n));
      }
    }
    for (long& b : bins_) b %= static_cast<long>(m_);
    phases_.resize(static_cast<Eigen::Index>(n));
    acc_.resize(nb);
  }

  void evaluate(const Eigen::VectorXcd& p, Eigen::Ref<Eigen::RowVectorXcd> out) {
    const std::size_t nb = bins_.size();
    if (m_ == 0) {
      fft::forward(p, full_);
      for (std::size_t j = 0; j < nb; ++j) out[static_cast<Eigen::Index>(j)] = full_[bins_[j]];
      return;
    }
    fft::forward_interleaved(std::span<const cd>(p.data(), static_cast<std::size_t>(p.size())),
                             std::span<cd>(phases_.data(), static_cast<std::size_t>(phases_.size())), d_);
    // Accumulate in real arithmetic; the loop runs d * bins times per call.
    std::fill(acc_.begin(), acc_.end(), cd{});
    for (std::size_t r = 0; r < d_; ++r) {
      const cd* phase = phases_.data() + r * m_;
      const cd* tw = twiddle_.data() + r * nb;
      for (std::size_t j = 0; j < nb; ++j) {
        const cd v = phase[bins_[j]];
        const double re = tw[j].real() * v.real() - tw[j].imag() * v.imag();
        const double im = tw[j].real() * v.imag() + tw[j].imag() * v.real();
        acc_[j] += cd(re, im);
      }
    }
    for (std::size_t j = 0; j < nb; ++j) out[static_cast<Eigen::Index>(j)] = acc_[j];
  }

 private:
  std::vector<long> bins_;
  std::size_t m_ = 0;
  std::size_t d_ = 0;
  std::vector<cd> twiddle_;  // row-major d x bins
  std::vector<cd> acc_;
  Eigen::VectorXcd phases_;
  Eigen::VectorXcd full_;
};

}  // namespace

Eigen::MatrixXcd delay_doppler_correlation(std::span<const cd> x, std::span<const cd> ref,
                                           std::span<const int> delays,
                                           std::span<const double> doppler_hz,
                                           double sample_rate, DelayMode mode) {
  const std::size_t n = x.size();
  if (ref.size() != n) throw std::invalid_argument("correlation: signal and reference lengths differ");
  if (n == 0) throw std::invalid_argument("correlation: empty input");
  if (doppler_hz.empty()) throw std::invalid_argument("correlation: empty Doppler grid");

  // Split the Doppler list into DFT-bin hits and off-grid values.
  const double bins_per_hz = static_cast<double>(n) / sample_rate;
  const auto nl = static_cast<long>(n);
  std::vector<long> on_grid_bins;
  std::vector<std::size_t> on_grid_cols;
  std::vector<std::size_t> off_grid_cols;
  for (std::size_t j = 0; j < doppler_hz.size(); ++j) {
    const double k = doppler_hz[j] * bins_per_hz;
    const double kr = std::round(k);
    if (std::abs(k - kr) < 1e-9 * std::max(1.0, std::abs(k))) {
      on_grid_bins.push_back(((static_cast<long>(kr) % nl) + nl) % nl);
      on_grid_cols.push_back(j);
    } else {
      off_grid_cols.push_back(j);
    }
  }
  BinEvaluator evaluator(n, on_grid_bins);

  Eigen::MatrixXcd out(static_cast<Eigen::Index>(delays.size()),
                       static_cast<Eigen::Index>(doppler_hz.size()));
  Eigen::VectorXcd product(static_cast<Eigen::Index>(n));
  const Eigen::Map<const Eigen::VectorXcd> xv(x.data(), nl);
  const Eigen::Map<const Eigen::VectorXcd> rv(ref.data(), nl);
  Eigen::RowVectorXcd picked(static_cast<Eigen::Index>(on_grid_bins.size()));

  // Off-grid columns: exact phasors within a block, one rotation per block.
  constexpr long kBlock = 1024;
  Eigen::MatrixXcd block_phasors(kBlock, static_cast<Eigen::Index>(off_grid_cols.size()));
  for (std::size_t k = 0; k < off_grid_cols.size(); ++k) {
    const double w = -kTwoPi * doppler_hz[off_grid_cols[k]] / sample_rate;
    for (long t = 0; t < kBlock; ++t) {
      block_phasors(t, static_cast<Eigen::Index>(k)) = std::polar(1.0, w * static_cast<double>(t));
    }
  }

  for (std::size_t i = 0; i < delays.size(); ++i) {
    long tau = delays[i];
    if (mode == DelayMode::circular) {
      tau = ((tau % nl) + nl) % nl;
      product.head(tau) = xv.head(tau).cwiseProduct(rv.tail(tau).conjugate());
      product.tail(nl - tau) = xv.tail(nl - tau).cwiseProduct(rv.head(nl - tau).conjugate());
    } else {
      const long lo = std::clamp(tau, 0L, nl);
      const long hi = std::clamp(nl + tau, 0L, nl);
      product.setZero();
      if (hi > lo) product.segment(lo, hi - lo) = xv.segment(lo, hi - lo).cwiseProduct(rv.segment(lo - tau, hi - lo).conjugate());
    }
    const auto row = static_cast<Eigen::Index>(i);
    if (!on_grid_bins.empty()) {
      evaluator.evaluate(product, picked);
      for (std::size_t j = 0; j < on_grid_cols.size(); ++j) {
        out(row, static_cast<Eigen::Index>(on_grid_cols[j])) = picked[static_cast<Eigen::Index>(j)];
      }
    }
    for (std::size_t k = 0; k < off_grid_cols.size(); ++k) {
      const std::size_t j = off_grid_cols[k];
      const double w = -kTwoPi * doppler_hz[j] / sample_rate;
      cd acc = 0.0;
      for (long start = 0; start < nl; start += kBlock) {
        const long len = std::min(kBlock, nl - start);
        const cd part = product.segment(start, len).cwiseProduct(block_phasors.col(static_cast<Eigen::Index>(k)).head(len)).sum();
        acc += part * std::polar(1.0, w * static_cast<double>(start));
      }
      out(row, static_cast<Eigen::Index>(j)) = acc;
    }
  }
  return out;
}

}  // namespace pbr
