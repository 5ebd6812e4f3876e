#include "pbr/cancellation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <set>

#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "pbr/detection.hpp"
#include "pbr/fft.hpp"

namespace pbr {
namespace {

// Doppler bin index of f_hz on a period-sample grid, or -1 if off grid.
long integer_bin(double f_hz, double fs, long period) {
  if (period <= 0) return -1;
  const double k = f_hz * static_cast<double>(period) / fs;
  const double kr = std::round(k);
  if (std::abs(k - kr) > 1e-9 * std::max(1.0, std::abs(k))) return -1;
  const auto ki = static_cast<long>(kr);
  return ((ki % period) + period) % period;
}

// exp(j 2 pi f t / fs) for t in [0, n). Integer bins of `period` use exact
// modular phase so the sequence is periodic to the last bit.
Eigen::VectorXcd doppler_phasors(double f_hz, double fs, long n, long period) {
  Eigen::VectorXcd out(n);
  const long k = integer_bin(f_hz, fs, period);
  if (k >= 0) {
    const double scale = kTwoPi / static_cast<double>(period);
    long acc = 0;
    for (long t = 0; t < n; ++t) {
      out[t] = std::polar(1.0, scale * static_cast<double>(acc));
      acc += k;
      if (acc >= period) acc -= period;
    }
    return out;
  }
  const double nu = f_hz / fs;
  for (long t = 0; t < n; ++t) {
    out[t] = std::polar(1.0, kTwoPi * std::remainder(nu * static_cast<double>(t), 1.0));
  }
  return out;
}

cd reference_sample(const Dictionary& y, long i) {
  const auto len = static_cast<long>(y.reference.size());
  if (y.delay_mode == DelayMode::circular) return y.reference[((i % len) + len) % len];
  return (i >= 0 && i < len) ? y.reference[i] : cd{};
}

void finalize_axes(Dictionary& y) {
  std::set<int> delays;
  std::set<double> dopplers;
  for (const auto& a : y.atoms) {
    delays.insert(a.delay);
    dopplers.insert(a.doppler_hz);
  }
  y.delay_bins.assign(delays.begin(), delays.end());
  y.doppler_bins.assign(dopplers.begin(), dopplers.end());
}

void check_reference(const DirectPathEstimate& s_dp, const char* who) {
  if (s_dp.signal.size() == 0) throw std::invalid_argument(std::string(who) + ": empty reference");
  if (!(s_dp.signal.sample_rate > 0.0)) {
    throw std::invalid_argument(std::string(who) + ": reference sample rate must be positive");
  }
}

std::vector<double> column_power(const Eigen::MatrixXcd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  const double rows = std::max<double>(1.0, static_cast<double>(m.rows()));
  for (Eigen::Index l = 0; l < m.cols(); ++l) out[static_cast<std::size_t>(l)] = m.col(l).squaredNorm() / rows;
  return out;
}

// Applies Y, Y^H and forms Y^H Y for a Dictionary without materialising Y.
//
// Every atom is ext[t + c] * exp(j 2 pi f t / fs) for one fixed extended
// reference `ext`, so each product reduces to FFT correlations against ext,
// one per distinct Doppler value. When the dictionary spans the whole
// circular reference on integer Doppler bins the transforms run at the
// record length and a Doppler shift is a rotation of the spectrum;
// otherwise ext is zero padded and the phasors are applied in time.
class StructuredDictionary {
 public:
  explicit StructuredDictionary(const Dictionary& y) : y_(y) {
    rows_ = static_cast<long>(y.rows);
    const auto len = static_cast<long>(y.reference.size());
    int qmin = y.atoms.front().delay;
    int qmax = qmin;
    for (const auto& a : y.atoms) {
      qmin = std::min(qmin, a.delay);
      qmax = std::max(qmax, a.delay);
    }
    qspan_ = qmax - qmin;

    periodic_ = y.delay_mode == DelayMode::circular && len == rows_ && y.row_offset == 0;
    for (const auto& a : y.atoms) {
      if (integer_bin(a.doppler_hz, y.sample_rate, rows_) < 0) periodic_ = false;
    }

    if (periodic_) {
      fft_size_ = rows_;
      ext_ = y.reference;
      for (const auto& a : y.atoms) c_.push_back(((-static_cast<long>(a.delay)) % rows_ + rows_) % rows_);
    } else {
      const long ext_len = rows_ + qspan_;
      fft_size_ = static_cast<long>(fft::next_fast_size(static_cast<std::size_t>(ext_len)));
      ext_ = Eigen::VectorXcd::Zero(fft_size_);
      const long base = static_cast<long>(y.row_offset) - qmax;
      for (long j = 0; j < ext_len; ++j) ext_[j] = reference_sample(y, j + base);
      for (const auto& a : y.atoms) c_.push_back(qmax - a.delay);
    }
    fft::forward(ext_, ext_spec_);

    std::map<double, std::size_t> by_doppler;
    for (std::size_t k = 0; k < y.atoms.size(); ++k) {
      const double f = y.atoms[k].doppler_hz;
      auto [it, inserted] = by_doppler.emplace(f, groups_.size());
      if (inserted) groups_.push_back({f, periodic_ ? integer_bin(f, y.sample_rate, rows_) : -1, {}});
      groups_[it->second].cols.push_back(k);
    }
    // With few atoms per Doppler shift the FFT sharing buys nothing; build
    // the columns in row blocks instead.
    direct_ = !periodic_ && groups_.size() * 4 > y.atoms.size();
    if (direct_ && static_cast<std::size_t>(rows_) * groups_.size() <= kPhasorCacheEntries) {
      phasor_cache_.resize(rows_, static_cast<Eigen::Index>(groups_.size()));
      group_of_.resize(y.atoms.size());
      for (std::size_t g = 0; g < groups_.size(); ++g) {
        phasor_cache_.col(static_cast<Eigen::Index>(g)) =
            doppler_phasors(groups_[g].doppler_hz, y.sample_rate, rows_, rows_);
        for (std::size_t k : groups_[g].cols) group_of_[k] = g;
      }
    }
  }

  [[nodiscard]] Eigen::MatrixXcd adjoint_times(const Eigen::MatrixXcd& x) const {
    if (direct_) {
      Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(y_.cols()), x.cols());
      for (long t0 = 0; t0 < rows_; t0 += kBlockRows) {
        const long len = std::min(kBlockRows, rows_ - t0);
        out.noalias() += block(t0, len).adjoint() * x.middleRows(t0, len);
      }
      return out;
    }
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(y_.cols()), x.cols());
    if (periodic_) {
      // x * conj(phasor of bin k) has spectrum X[m + k].
      Eigen::VectorXcd xf;
      Eigen::VectorXcd prod(rows_);
      Eigen::VectorXcd r;
      const double inv_n = 1.0 / static_cast<double>(rows_);
      for (Eigen::Index l = 0; l < x.cols(); ++l) {
        fft::forward(x.col(l), xf);
        for (const auto& g : groups_) {
          const long k = g.bin;
          prod.head(rows_ - k) = xf.segment(k, rows_ - k).conjugate().cwiseProduct(ext_spec_.head(rows_ - k));
          prod.tail(k) = xf.head(k).conjugate().cwiseProduct(ext_spec_.tail(k));
          fft::inverse(prod, r);
          for (std::size_t col : g.cols) out(static_cast<Eigen::Index>(col), l) = std::conj(r[c_[col]]) * inv_n;
        }
      }
      return out;
    }
    Eigen::VectorXcd u(rows_);
    for (const auto& g : groups_) {
      const Eigen::VectorXcd ph = phasors(g.doppler_hz);
      for (Eigen::Index l = 0; l < x.cols(); ++l) {
        u = x.col(l).cwiseProduct(ph.conjugate());
        const Eigen::VectorXcd r = correlate(u);
        for (std::size_t k : g.cols) out(static_cast<Eigen::Index>(k), l) = std::conj(r[c_[k]]);
      }
    }
    return out;
  }

  [[nodiscard]] Eigen::MatrixXcd times(const Eigen::MatrixXcd& w) const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rows_, w.cols());
    if (direct_) {
      for (long t0 = 0; t0 < rows_; t0 += kBlockRows) {
        const long len = std::min(kBlockRows, rows_ - t0);
        out.middleRows(t0, len).noalias() = block(t0, len) * w;
      }
      return out;
    }
    Eigen::VectorXcd v(fft_size_);
    Eigen::VectorXcd spec;
    Eigen::VectorXcd h;
    const double inv_n = 1.0 / static_cast<double>(fft_size_);
    if (periodic_) {
      // Modulating by bin k rotates the spectrum by k, so all groups share
      // one inverse transform per antenna.
      Eigen::VectorXcd acc(rows_);
      for (Eigen::Index l = 0; l < w.cols(); ++l) {
        acc.setZero();
        for (const auto& g : groups_) {
          v.setZero();
          for (std::size_t k : g.cols) v[c_[k]] += w(static_cast<Eigen::Index>(k), l);
          fft::inverse(v, spec);
          spec.array() *= ext_spec_.array();
          const long k = g.bin;
          acc.tail(rows_ - k) += spec.head(rows_ - k);
          acc.head(k) += spec.tail(k);
        }
        fft::inverse(acc, h);
        out.col(l) = h * inv_n;
      }
      return out;
    }
    for (const auto& g : groups_) {
      const Eigen::VectorXcd ph = phasors(g.doppler_hz);
      for (Eigen::Index l = 0; l < w.cols(); ++l) {
        v.setZero();
        for (std::size_t k : g.cols) v[c_[k]] += w(static_cast<Eigen::Index>(k), l);
        // h[t] = sum_c v[c] ext[t + c]: the unnormalised inverse transform of
        // v is the forward transform of v reversed in time.
        fft::inverse(v, spec);
        spec.array() *= ext_spec_.array();
        fft::inverse(spec, h);
        out.col(l).array() += h.head(rows_).array() * ph.array() * inv_n;
      }
    }
    return out;
  }

  [[nodiscard]] Eigen::MatrixXcd gram() const {
    if (direct_) return direct_gram();
    return periodic_ ? periodic_gram() : padded_gram();
  }

 private:
  static constexpr long kBlockRows = 2048;
  static constexpr std::size_t kPhasorCacheEntries = std::size_t{1} << 22;

  // Rows [t0, t0 + len) of the dictionary, matching Dictionary::column.
  [[nodiscard]] Eigen::MatrixXcd block(long t0, long len) const {
    const auto m = static_cast<Eigen::Index>(y_.cols());
    Eigen::MatrixXcd b(len, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto& a = y_.atoms[static_cast<std::size_t>(k)];
      const long shift = static_cast<long>(y_.row_offset) - a.delay;
      if (phasor_cache_.size() > 0) {
        const auto ph = phasor_cache_.col(static_cast<Eigen::Index>(group_of_[static_cast<std::size_t>(k)]));
        for (long t = t0; t < t0 + len; ++t) b(t - t0, k) = reference_sample(y_, t + shift) * ph[t];
        continue;
      }
      const long bin = integer_bin(a.doppler_hz, y_.sample_rate, rows_);
      const double nu = a.doppler_hz / y_.sample_rate;
      const double scale = kTwoPi / static_cast<double>(rows_);
      for (long t = t0; t < t0 + len; ++t) {
        const double angle =
            bin >= 0 ? scale * static_cast<double>((static_cast<long long>(bin) * t) % rows_)
                     : kTwoPi * std::remainder(nu * static_cast<double>(t), 1.0);
        b(t - t0, k) = reference_sample(y_, t + shift) * std::polar(1.0, angle);
      }
    }
    return b;
  }

  [[nodiscard]] Eigen::MatrixXcd direct_gram() const {
    const auto m = static_cast<Eigen::Index>(y_.cols());
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(m, m);
    for (long t0 = 0; t0 < rows_; t0 += kBlockRows) {
      const long len = std::min(kBlockRows, rows_ - t0);
      const Eigen::MatrixXcd b = block(t0, len);
      g.noalias() += b.adjoint() * b;
    }
    return g;
  }

  struct Group {
    double doppler_hz;
    long bin;  ///< integer Doppler bin in the periodic layout
    std::vector<std::size_t> cols;
  };

  // G[i, j] = exp(-j 2 pi dk c_i / N) r_dk[c_j - c_i] with dk = k_j - k_i and
  // r_dk[c] = sum_t conj(ext[t]) ext[t + c] exp(j 2 pi dk t / N).
  [[nodiscard]] Eigen::MatrixXcd periodic_gram() const {
    const auto m = static_cast<Eigen::Index>(y_.cols());
    Eigen::MatrixXcd g(m, m);
    Eigen::VectorXcd twiddle(rows_);
    for (long t = 0; t < rows_; ++t) {
      twiddle[t] = std::polar(1.0, kTwoPi * static_cast<double>(t) / static_cast<double>(rows_));
    }
    std::map<long, Eigen::VectorXcd> base_sums;
    Eigen::VectorXcd prod(rows_);
    Eigen::VectorXcd r;
    const double inv_n = 1.0 / static_cast<double>(rows_);
    auto base = [&](long dk) -> const Eigen::VectorXcd& {
      auto it = base_sums.find(dk);
      if (it != base_sums.end()) return it->second;
      prod.head(rows_ - dk) = ext_spec_.segment(dk, rows_ - dk).conjugate().cwiseProduct(ext_spec_.head(rows_ - dk));
      prod.tail(dk) = ext_spec_.head(dk).conjugate().cwiseProduct(ext_spec_.tail(dk));
      fft::inverse(prod, r);
      Eigen::VectorXcd out(2 * qspan_ + 1);
      for (long dq = -qspan_; dq <= qspan_; ++dq) out[dq + qspan_] = r[((dq % rows_) + rows_) % rows_] * inv_n;
      return base_sums.emplace(dk, std::move(out)).first->second;
    };

    for (std::size_t ga = 0; ga < groups_.size(); ++ga) {
      for (std::size_t gb = ga; gb < groups_.size(); ++gb) {
        const long dk = ((groups_[gb].bin - groups_[ga].bin) % rows_ + rows_) % rows_;
        const Eigen::VectorXcd& s = base(dk);
        for (std::size_t i : groups_[ga].cols) {
          const long qi = y_.atoms[i].delay;
          const auto rot = static_cast<long>((static_cast<long long>(dk) * (((qi % rows_) + rows_) % rows_)) % rows_);
          const cd w = twiddle[rot];
          for (std::size_t j : groups_[gb].cols) {
            const cd value = w * s[qi - y_.atoms[j].delay + qspan_];
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
            g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = std::conj(value);
          }
        }
      }
    }
    return g;
  }

  [[nodiscard]] Eigen::MatrixXcd padded_gram() const {
    const auto m = static_cast<Eigen::Index>(y_.cols());
    Eigen::MatrixXcd g(m, m);
    std::map<long long, Eigen::VectorXcd> base_sums;

    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = a; b < m; ++b) {
        // Orient so atom j has the smaller delay, i.e. the larger ext offset.
        auto i = static_cast<std::size_t>(a);
        auto j = static_cast<std::size_t>(b);
        if (y_.atoms[j].delay > y_.atoms[i].delay) std::swap(i, j);
        const double df = y_.atoms[j].doppler_hz - y_.atoms[i].doppler_hz;
        const long dq = y_.atoms[i].delay - y_.atoms[j].delay;

        const long long key = std::llround(df / y_.sample_rate * 1e12);
        auto it = base_sums.find(key);
        if (it == base_sums.end()) it = base_sums.emplace(key, base_sum(df)).first;
        cd value = it->second[dq];

        const long ci = c_[i];
        // Move the summation window from [0, rows) to [ci, ci + rows).
        for (long t = 0; t < ci; ++t) {
          value -= std::conj(ext_[t]) * ext_[t + dq] * phasor(df, t);
          value += std::conj(ext_[rows_ + t]) * ext_[rows_ + t + dq] * phasor(df, rows_ + t);
        }
        value *= std::conj(phasor(df, ci));
        g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
        g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = std::conj(value);
      }
    }
    return g;
  }

  [[nodiscard]] Eigen::VectorXcd phasors(double f_hz) const {
    return doppler_phasors(f_hz, y_.sample_rate, rows_, 0);
  }

  [[nodiscard]] cd phasor(double f_hz, long t) const {
    const double nu = f_hz / y_.sample_rate;
    return std::polar(1.0, kTwoPi * std::remainder(nu * static_cast<double>(t), 1.0));
  }

  // r[c] = sum_{t < rows} conj(u[t]) ext[t + c] in the padded layout.
  [[nodiscard]] Eigen::VectorXcd correlate(const Eigen::VectorXcd& u) const {
    Eigen::VectorXcd padded = Eigen::VectorXcd::Zero(fft_size_);
    padded.head(rows_) = u;
    Eigen::VectorXcd spec;
    fft::forward(padded, spec);
    spec = spec.conjugate().cwiseProduct(ext_spec_);
    Eigen::VectorXcd r;
    fft::inverse(spec, r);
    return r / static_cast<double>(fft_size_);
  }

  // sum_{t < rows} conj(ext[t]) ext[t + dq] exp(j 2 pi df t / fs) for
  // dq in [0, qspan].
  [[nodiscard]] Eigen::VectorXcd base_sum(double df) const {
    const Eigen::VectorXcd p = ext_.head(rows_).cwiseProduct(phasors(df).conjugate());
    return correlate(p).head(qspan_ + 1);
  }

  const Dictionary& y_;
  long rows_ = 0;
  long fft_size_ = 0;
  long qspan_ = 0;
  bool periodic_ = false;
  bool direct_ = false;
  Eigen::MatrixXcd phasor_cache_;  ///< one column per Doppler group
  std::vector<std::size_t> group_of_;
  Eigen::VectorXcd ext_;
  Eigen::VectorXcd ext_spec_;
  std::vector<long> c_;
  std::vector<Group> groups_;
};

// Rank-revealing pivoted Cholesky of a Hermitian positive semidefinite Gram
// matrix. Solves keep the leading `rank` pivoted columns and set the rest
// of the solution to zero.
class PivotedCholesky {
 public:
  PivotedCholesky(Eigen::MatrixXcd g, double relative_tolerance) : l_(std::move(g)) {
    const auto n = static_cast<lapack_int>(l_.rows());
    piv_.resize(static_cast<std::size_t>(n));
    const double tol = relative_tolerance * l_.diagonal().real().cwiseAbs().maxCoeff();
    lapack_int rank = 0;
    const lapack_int info =
        LAPACKE_zpstrf(LAPACK_COL_MAJOR, 'L', n, l_.data(), n, piv_.data(), &rank, tol);
    if (info < 0) throw NumericalError("ls_cancel: pivoted Cholesky rejected its arguments");
    rank_ = static_cast<Eigen::Index>(rank);
  }

  [[nodiscard]] Eigen::Index rank() const { return rank_; }

  [[nodiscard]] Eigen::MatrixXcd solve(const Eigen::MatrixXcd& b) const {
    Eigen::MatrixXcd z(rank_, b.cols());
    for (Eigen::Index i = 0; i < rank_; ++i) z.row(i) = b.row(piv_[static_cast<std::size_t>(i)] - 1);
    const auto l11 = l_.topLeftCorner(rank_, rank_).triangularView<Eigen::Lower>();
    l11.solveInPlace(z);
    l11.adjoint().solveInPlace(z);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(b.rows(), b.cols());
    for (Eigen::Index i = 0; i < rank_; ++i) out.row(piv_[static_cast<std::size_t>(i)] - 1) = z.row(i);
    return out;
  }

 private:
  Eigen::MatrixXcd l_;
  std::vector<lapack_int> piv_;
  Eigen::Index rank_ = 0;
};

void check_dictionary(const Dictionary& y) {
  if (y.atoms.empty()) throw std::invalid_argument("dictionary: no columns");
  if (y.rows == 0 || y.reference.size() == 0) throw std::invalid_argument("dictionary: empty reference");
  if (!(y.sample_rate > 0.0)) throw std::invalid_argument("dictionary: sample rate must be positive");
}

// Relative Gram pivot below which a column counts as dependent.
double rank_tolerance(const LsOptions& opts, std::size_t cols) {
  return std::max(opts.gram_rank_tolerance,
                  4.0 * static_cast<double>(cols) * std::numeric_limits<double>::epsilon());
}

}  // namespace

void EcaConfig::validate() const {
  if (Q < 1) throw std::invalid_argument("ECA: Q must be >= 1");
  if (P < 0) throw std::invalid_argument("ECA: P must be >= 0");
  if (R < 1) throw std::invalid_argument("ECA: R must be >= 1");
}

std::size_t eca_window_rows(std::size_t total_rows, const EcaConfig& cfg) {
  cfg.validate();
  const auto r = static_cast<std::size_t>(cfg.R);
  if (r > total_rows) throw std::invalid_argument("ECA: R exceeds the record length");
  return total_rows - r + 1;
}

Eigen::VectorXcd Dictionary::column(std::size_t k) const {
  const auto& a = atoms.at(k);
  const auto n = static_cast<long>(rows);
  const Eigen::VectorXcd ph = doppler_phasors(a.doppler_hz, sample_rate, n, n);
  Eigen::VectorXcd col(n);
  const long shift = static_cast<long>(row_offset) - a.delay;
  for (long t = 0; t < n; ++t) col[t] = reference_sample(*this, t + shift) * ph[t];
  return col;
}

Eigen::MatrixXcd Dictionary::materialize() const {
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols()));
  for (std::size_t k = 0; k < cols(); ++k) out.col(static_cast<Eigen::Index>(k)) = column(k);
  return out;
}

Dictionary build_eca_dictionary(const DirectPathEstimate& s_dp, const EcaConfig& cfg,
                                std::size_t data_rows) {
  check_reference(s_dp, "build_eca_dictionary");
  cfg.validate();
  const std::size_t len = s_dp.signal.size();
  if (data_rows == 0) throw std::invalid_argument("build_eca_dictionary: data_rows must be positive");
  if (len < data_rows + static_cast<std::size_t>(cfg.Q) - 1) {
    throw std::invalid_argument(
        "build_eca_dictionary: reference must be at least data_rows + Q - 1 samples long");
  }
  if (2 * static_cast<std::size_t>(cfg.P) >= data_rows) {
    throw std::invalid_argument("build_eca_dictionary: Doppler bins exceed the window's Nyquist range");
  }
  Dictionary y;
  y.kind = DictionaryKind::eca;
  y.reference = s_dp.signal.samples;
  y.sample_rate = s_dp.signal.sample_rate;
  y.rows = data_rows;
  y.row_offset = len - data_rows;
  y.delay_mode = DelayMode::linear;
  const double step = y.sample_rate / static_cast<double>(data_rows);
  for (int p = -cfg.P; p <= cfg.P; ++p) {
    for (int q = 0; q < cfg.Q; ++q) y.atoms.push_back({q, p * step});
  }
  finalize_axes(y);
  return y;
}

Eigen::MatrixXcd build_meca_reference(const DirectPathEstimate& s_dp, int q_bar) {
  check_reference(s_dp, "build_meca_reference");
  const auto n = static_cast<long>(s_dp.signal.size());
  if (q_bar < 1 || q_bar > n) throw std::invalid_argument("build_meca_reference: Q_bar must lie in [1, L_T]");
  Eigen::MatrixXcd out(n, q_bar);
  const auto& s = s_dp.signal.samples;
  for (long q = 0; q < q_bar; ++q) {
    out.col(q).head(q) = s.tail(q);
    out.col(q).tail(n - q) = s.head(n - q);
  }
  return out;
}

Dictionary build_meca_dictionary(const DirectPathEstimate& s_dp, int q_bar, int p) {
  check_reference(s_dp, "build_meca_dictionary");
  const std::size_t n = s_dp.signal.size();
  if (q_bar < 1 || static_cast<std::size_t>(q_bar) > n) {
    throw std::invalid_argument("build_meca_dictionary: Q_bar must lie in [1, L_T]");
  }
  if (p < 0) throw std::invalid_argument("build_meca_dictionary: P must be >= 0");
  if (2 * static_cast<std::size_t>(p) >= n) {
    throw std::invalid_argument("build_meca_dictionary: Doppler bins exceed the window's Nyquist range");
  }
  Dictionary y;
  y.kind = DictionaryKind::meca;
  y.reference = s_dp.signal.samples;
  y.sample_rate = s_dp.signal.sample_rate;
  y.rows = n;
  y.delay_mode = DelayMode::circular;
  const double step = y.sample_rate / static_cast<double>(n);
  for (int k = -p; k <= p; ++k) {
    for (int q = 0; q < q_bar; ++q) y.atoms.push_back({q, k * step});
  }
  finalize_axes(y);
  return y;
}

Dictionary build_strong_target_dictionary(const DirectPathEstimate& s_dp,
                                          std::span<const Detection> detections, int r0, int f0,
                                          double doppler_step_hz, StrongTargetWindow window) {
  check_reference(s_dp, "build_strong_target_dictionary");
  if (detections.empty()) throw std::invalid_argument("build_strong_target_dictionary: no detections");
  if (r0 < 0 || f0 < 0) throw std::invalid_argument("build_strong_target_dictionary: r0 and f0 must be >= 0");
  if (!(doppler_step_hz > 0.0)) {
    throw std::invalid_argument("build_strong_target_dictionary: Doppler step must be positive");
  }
  const auto n = static_cast<long>(s_dp.signal.size());
  const double fs = s_dp.signal.sample_rate;

  Dictionary y;
  y.kind = DictionaryKind::strong_target;
  y.reference = s_dp.signal.samples;
  y.sample_rate = fs;
  y.rows = static_cast<std::size_t>(n);
  y.delay_mode = DelayMode::circular;
  for (const auto& det : detections) {
    if (det.range_bin < 0 || det.range_bin >= n) {
      throw std::invalid_argument("build_strong_target_dictionary: range bin outside the window");
    }
    const int hi = det.range_bin + r0;
    if (hi >= n) throw std::invalid_argument("build_strong_target_dictionary: delay taps exceed the window");
    const int lo = window == StrongTargetWindow::literal ? 0 : std::max(0, det.range_bin - r0);
    // Snap the detected Doppler onto the resolution grid before stepping.
    const double centre = std::round(det.doppler_hz / doppler_step_hz) * doppler_step_hz;
    for (int j = -f0; j <= f0; ++j) {
      const double f = centre + j * doppler_step_hz;
      if (std::abs(f) >= 0.5 * fs) {
        throw std::invalid_argument("build_strong_target_dictionary: Doppler bin beyond fs/2");
      }
      for (int q = lo; q <= hi; ++q) y.atoms.push_back({q, f});
    }
  }
  finalize_axes(y);
  return y;
}

Dictionary join_dictionaries(const Dictionary& base, const Dictionary& extra) {
  check_dictionary(base);
  check_dictionary(extra);
  const bool same = base.rows == extra.rows && base.row_offset == extra.row_offset &&
                    base.delay_mode == extra.delay_mode && base.sample_rate == extra.sample_rate &&
                    base.reference.size() == extra.reference.size() && base.reference == extra.reference;
  if (!same) throw std::invalid_argument("join_dictionaries: dictionaries use different reference windows");
  Dictionary out = base;
  out.atoms.insert(out.atoms.end(), extra.atoms.begin(), extra.atoms.end());
  finalize_axes(out);
  return out;
}

CancellationResult ls_cancel(const ArrayData& x, const Dictionary& y, const LsOptions& opts) {
  check_dictionary(y);
  if (x.rows() != y.rows) {
    throw std::invalid_argument("ls_cancel: dictionary rows (" + std::to_string(y.rows) +
                                ") differ from data rows (" + std::to_string(x.rows()) + ")");
  }
  if (x.matrix.cols() == 0) throw std::invalid_argument("ls_cancel: no antenna columns");
  if (!x.matrix.allFinite()) throw std::invalid_argument("ls_cancel: data contains non-finite samples");
  if (!y.reference.allFinite()) throw std::invalid_argument("ls_cancel: reference contains non-finite samples");

  LsRoute route = opts.route;
  if (route == LsRoute::automatic) {
    route = y.rows * y.cols() <= opts.dense_limit ? LsRoute::dense : LsRoute::structured;
  }

  CancellationResult out;
  out.route_used = route;
  out.cleaned.sample_rate = x.sample_rate;
  out.cleaned.geometry = x.geometry;

  if (route == LsRoute::dense) {
    const Eigen::MatrixXcd ym = y.materialize();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(ym.rows(), ym.cols());
    // R pivots scale as the square root of Gram pivots.
    qr.setThreshold(std::sqrt(rank_tolerance(opts, y.cols())));
    qr.compute(ym);
    // solve() ignores the threshold, so truncate to the numerical rank here.
    const Eigen::Index r = qr.rank();
    out.rank = static_cast<std::size_t>(r);
    const Eigen::MatrixXcd qtx = qr.householderQ().adjoint() * x.matrix;
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(ym.cols(), x.matrix.cols());
    w.topRows(r) = qr.matrixR().topLeftCorner(r, r).triangularView<Eigen::Upper>().solve(qtx.topRows(r));
    out.weights = qr.colsPermutation() * w;
    out.cleaned.matrix = x.matrix - ym * out.weights;
  } else {
    const StructuredDictionary op(y);
    const PivotedCholesky chol(op.gram(), rank_tolerance(opts, y.cols()));
    out.rank = static_cast<std::size_t>(chol.rank());
    out.weights = chol.solve(op.adjoint_times(x.matrix));
    out.cleaned.matrix = x.matrix - op.times(out.weights);
    // One refinement pass against the true dictionary recovers the accuracy
    // lost by squaring the condition number in the Gram matrix.
    const Eigen::MatrixXcd dw = chol.solve(op.adjoint_times(out.cleaned.matrix));
    out.weights += dw;
    out.cleaned.matrix -= op.times(dw);
  }

  if (!out.cleaned.matrix.allFinite() || !out.weights.allFinite()) {
    throw NumericalError("ls_cancel: least-squares solve produced non-finite values");
  }
  if (out.rank < y.cols()) {
    out.rank_deficient = true;
    out.warning = "dictionary is rank deficient (rank " + std::to_string(out.rank) + " of " +
                  std::to_string(y.cols()) + " columns); dependent columns were dropped";
  }
  out.input_power_per_antenna = column_power(x.matrix);
  out.residual_power_per_antenna = column_power(out.cleaned.matrix);
  return out;
}

ArrayData cancel_strong_targets(const ArrayData& x_meca, const Dictionary& y_s, const LsOptions& opts) {
  return ls_cancel(x_meca, y_s, opts).cleaned;
}

ArrayData drop_leading_rows(const ArrayData& x, std::size_t count) {
  if (count >= x.rows()) throw std::invalid_argument("drop_leading_rows: nothing would remain");
  ArrayData out;
  out.sample_rate = x.sample_rate;
  out.geometry = x.geometry;
  out.matrix = x.matrix.bottomRows(static_cast<Eigen::Index>(x.rows() - count));
  return out;
}

DirectPathEstimate trailing_samples(const DirectPathEstimate& s_dp, std::size_t rows) {
  if (rows == 0 || rows > s_dp.signal.size()) {
    throw std::invalid_argument("trailing_samples: row count outside the reference length");
  }
  DirectPathEstimate out = s_dp;
  out.signal.samples = s_dp.signal.samples.tail(static_cast<Eigen::Index>(rows));
  return out;
}

}  // namespace pbr
