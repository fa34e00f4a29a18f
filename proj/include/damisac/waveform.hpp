#pragma once

// Symbol generation, DAM and OFDM transmit synthesis, and PAPR statistics.

#include "damisac/common.hpp"
#include "damisac/random.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <set>
#include <span>
#include <string_view>
#include <vector>

namespace damisac {

enum class Modulation { QPSK, QAM16, QAM64 };

inline Modulation parse_modulation(std::string_view name) {
  if (name == "qpsk" || name == "QPSK") return Modulation::QPSK;
  if (name == "qam16" || name == "16qam" || name == "QAM16") return Modulation::QAM16;
  if (name == "qam64" || name == "64qam" || name == "QAM64") return Modulation::QAM64;
  throw InvalidArgument("unknown modulation '" + std::string(name) + "'");
}

inline const char* to_string(Modulation m) {
  switch (m) {
    case Modulation::QPSK: return "qpsk";
    case Modulation::QAM16: return "qam16";
    case Modulation::QAM64: return "qam64";
  }
  return "?";
}

/// Square QAM / QPSK alphabet scaled to unit average power.
struct Constellation {
  Modulation kind = Modulation::QPSK;
  std::vector<cplx> points;
  double a_max = 1.0;

  static Constellation make(Modulation kind) {
    const int side = kind == Modulation::QPSK ? 2 : kind == Modulation::QAM16 ? 4 : 8;
    Constellation c;
    c.kind = kind;
    double energy = 0.0;
    for (int i = 0; i < side; ++i) {
      for (int q = 0; q < side; ++q) {
        const cplx p(2.0 * i - (side - 1), 2.0 * q - (side - 1));
        c.points.push_back(p);
        energy += std::norm(p);
      }
    }
    const double scale = 1.0 / std::sqrt(energy / static_cast<double>(c.points.size()));
    c.a_max = 0.0;
    for (auto& p : c.points) {
      p *= scale;
      c.a_max = std::max(c.a_max, std::abs(p));
    }
    return c;
  }

  cplx draw(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    return points[pick(rng)];
  }
};

/// i.i.d. symbol stream s[n], n in [-pad, length-1].
class SymbolFrame {
 public:
  SymbolFrame(std::vector<cplx> data, int pad) : data_(std::move(data)), pad_(pad) {
    require(pad_ >= 0 && static_cast<int>(data_.size()) > pad_, "symbol frame needs pad >= 0 and N >= 1");
  }

  static SymbolFrame random(const Constellation& c, int length, int pad, std::uint64_t seed) {
    require(length >= 1 && pad >= 0, "symbol frame needs N >= 1 and pad >= 0");
    Rng rng(seed);
    std::vector<cplx> d(static_cast<std::size_t>(length + pad));
    for (auto& s : d) s = c.draw(rng);
    return SymbolFrame(std::move(d), pad);
  }

  int length() const { return static_cast<int>(data_.size()) - pad_; }
  int pad() const { return pad_; }
  /// s[n] for n in [-pad, N-1].
  cplx operator[](int n) const { return data_[static_cast<std::size_t>(n + pad_)]; }
  std::span<const cplx> raw() const { return data_; }

 private:
  std::vector<cplx> data_;
  int pad_;
};

/// Per-path beamformers F = [f_1..f_L] with their delay pre-compensations.
struct BeamformerSet {
  CMat vectors;             // M x L
  std::vector<int> kappas;  // length L, pairwise distinct

  BeamformerSet() = default;
  BeamformerSet(CMat f, std::vector<int> k) : vectors(std::move(f)), kappas(std::move(k)) { validate(); }

  int num_antennas() const { return static_cast<int>(vectors.rows()); }
  int num_paths() const { return static_cast<int>(vectors.cols()); }
  CVec f(int l) const { return vectors.col(l); }
  double total_power() const { return vectors.squaredNorm(); }
  int max_kappa() const { return kappas.empty() ? 0 : *std::ranges::max_element(kappas); }

  void validate() const {
    require(static_cast<int>(kappas.size()) == num_paths(), "one kappa per beamformer column");
    std::set<int> seen;
    for (int k : kappas) {
      require(k >= 0, "kappas must be nonnegative");
      require(seen.insert(k).second, "kappas must be pairwise distinct");
    }
  }

  bool within_power(double p_t, double tol = 1e-9) const { return total_power() <= p_t * (1.0 + tol); }
};

/// kappa_l = max(delays) - n_l.
inline std::vector<int> kappas_from_delays(std::span<const int> delays) {
  require(!delays.empty(), "need at least one delay");
  std::set<int> seen;
  for (int d : delays) {
    require(d >= 0, "delays must be nonnegative");
    require(seen.insert(d).second, "delays must be pairwise distinct");
  }
  const int n_max = *std::ranges::max_element(delays);
  std::vector<int> k;
  for (int d : delays) k.push_back(n_max - d);
  return k;
}

/// Per-antenna baseband at symbol rate. Column c holds time index n = c - history.
struct TxFrame {
  CMat samples;
  int history = 0;

  int num_antennas() const { return static_cast<int>(samples.rows()); }
  int length() const { return static_cast<int>(samples.cols()) - history; }
  auto at(int n) const { return samples.col(n + history); }
};

/// x[n] = sum_l f_l s[n - kappa_l] for n in [-history, N-1].
inline TxFrame dam_modulate(const BeamformerSet& bf, const SymbolFrame& frame, int history = 0) {
  bf.validate();
  require(history >= 0, "history must be nonnegative");
  if (frame.pad() < bf.max_kappa() + history)
    throw InvalidArgument("symbol pad " + std::to_string(frame.pad()) + " too small for max kappa " +
                          std::to_string(bf.max_kappa()) + " plus history " + std::to_string(history));
  const int cols = frame.length() + history;
  const int num_paths = bf.num_paths();
  CMat shifted(num_paths, cols);
  for (int l = 0; l < num_paths; ++l)
    for (int c = 0; c < cols; ++c) shifted(l, c) = frame[c - history - bf.kappas[l]];
  return TxFrame{bf.vectors * shifted, history};
}

/// u[n] = a^H x[n], the transmit stream seen from direction a.
inline CVec project(const TxFrame& tx, const CVec& a) {
  require(a.size() == tx.num_antennas(), "steering vector length mismatch");
  return (a.adjoint() * tx.samples).transpose();
}

inline bool is_power_of_two(int k) { return k > 0 && (k & (k - 1)) == 0; }

/// x_i[n] = sum_k w_k X_i[k] e^{j 2 pi k n / K}, each symbol prefixed by its last cp_len samples.
/// Unnormalized, so the average per-sample power is sum_k |w_k|^2 E|X|^2.
inline TxFrame ofdm_modulate(const CMat& precoders, const CMat& data, int cp_len) {
  const int num_sc = static_cast<int>(precoders.cols());
  const int num_ant = static_cast<int>(precoders.rows());
  const int num_sym = static_cast<int>(data.rows());
  require(is_power_of_two(num_sc), "subcarrier count must be a power of two");
  require(data.cols() == num_sc, "data must be I x K with K matching the precoders");
  require(cp_len >= 0 && cp_len <= num_sc, "cyclic prefix must lie in [0, K]");
  const int sym_len = num_sc + cp_len;
  TxFrame tx{CMat(num_ant, static_cast<Eigen::Index>(num_sym) * sym_len), 0};
  Eigen::FFT<double> fft;
  std::vector<cplx> loads(static_cast<std::size_t>(num_sc));
  std::vector<cplx> body;
  const double scale = static_cast<double>(num_sc);  // inv() divides by K
  for (int i = 0; i < num_sym; ++i) {
    for (int m = 0; m < num_ant; ++m) {
      for (int k = 0; k < num_sc; ++k) loads[k] = precoders(m, k) * data(i, k);
      fft.inv(body, loads);
      const Eigen::Index base = static_cast<Eigen::Index>(i) * sym_len;
      for (int n = 0; n < cp_len; ++n) tx.samples(m, base + n) = scale * body[num_sc - cp_len + n];
      for (int n = 0; n < num_sc; ++n) tx.samples(m, base + cp_len + n) = scale * body[n];
    }
  }
  return tx;
}

/// I x K matrix of i.i.d. constellation points.
inline CMat random_ofdm_data(const Constellation& c, int num_symbols, int num_subcarriers, std::uint64_t seed) {
  Rng rng(seed);
  CMat d(num_symbols, num_subcarriers);
  for (int i = 0; i < num_symbols; ++i)
    for (int k = 0; k < num_subcarriers; ++k) d(i, k) = c.draw(rng);
  return d;
}

struct PaprResult {
  std::vector<double> per_antenna;
  double overall = 0.0;
};

namespace detail {
inline double row_mean_power(const TxFrame& tx, int m) {
  const double mean = tx.samples.row(m).squaredNorm() / static_cast<double>(tx.samples.cols());
  if (!(mean > 0.0)) throw InvalidArgument("antenna " + std::to_string(m) + " is silent; PAPR undefined");
  return mean;
}
}  // namespace detail

/// PAPR of each non-overlapping window of window_len samples, per antenna (row-major in antenna).
/// The denominator is the empirical mean power of the whole antenna stream.
inline std::vector<double> papr_windows(const TxFrame& tx, int window_len) {
  const auto cols = tx.samples.cols();
  require(window_len >= 1 && window_len <= cols, "window length must lie in [1, frame length]");
  const auto windows = cols / window_len;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(windows * tx.num_antennas()));
  for (int m = 0; m < tx.num_antennas(); ++m) {
    const double mean = detail::row_mean_power(tx, m);
    for (Eigen::Index w = 0; w < windows; ++w) {
      double peak = 0.0;
      for (Eigen::Index c = w * window_len; c < (w + 1) * window_len; ++c)
        peak = std::max(peak, std::norm(tx.samples(m, c)));
      out.push_back(peak / mean);
    }
  }
  return out;
}

/// Per-antenna PAPR (max over windows) and the overall maximum.
inline PaprResult papr(const TxFrame& tx, int window_len) {
  const auto samples = papr_windows(tx, window_len);
  const auto per = samples.size() / static_cast<std::size_t>(tx.num_antennas());
  PaprResult r;
  for (int m = 0; m < tx.num_antennas(); ++m) {
    const auto first = samples.begin() + static_cast<std::ptrdiff_t>(m * per);
    r.per_antenna.push_back(*std::max_element(first, first + static_cast<std::ptrdiff_t>(per)));
  }
  r.overall = *std::ranges::max_element(r.per_antenna);
  return r;
}

namespace detail {
inline std::vector<double> coherent_bound(const CMat& weights, double a_max) {
  std::vector<double> out;
  for (Eigen::Index m = 0; m < weights.rows(); ++m) {
    const double l1 = weights.row(m).cwiseAbs().sum();
    const double l2sq = weights.row(m).squaredNorm();
    if (!(l2sq > 0.0)) throw InvalidArgument("beamformer row " + std::to_string(m) + " is zero");
    out.push_back(a_max * a_max * l1 * l1 / l2sq);
  }
  return out;
}
}  // namespace detail

/// A_max^2 (sum_l |f_l^(m)|)^2 / sum_l |f_l^(m)|^2 per antenna.
inline std::vector<double> papr_bound_dam(const BeamformerSet& bf, double a_max) {
  return detail::coherent_bound(bf.vectors, a_max);
}

/// Same coherent-addition bound over the K subcarrier precoders (M x K).
inline std::vector<double> papr_bound_ofdm(const CMat& precoders, double a_max) {
  return detail::coherent_bound(precoders, a_max);
}

struct CcdfTable {
  std::vector<double> thresholds_db;
  std::vector<double> probability;
  std::size_t sample_count = 0;
};

/// Empirical P(PAPR > x) at each threshold (dB).
inline CcdfTable papr_ccdf(std::vector<double> samples, std::span<const double> thresholds_db) {
  require(!samples.empty(), "CCDF needs samples");
  std::ranges::sort(samples);
  CcdfTable t;
  t.sample_count = samples.size();
  for (double x_db : thresholds_db) {
    const double x = db_to_lin(x_db);
    const auto above = samples.end() - std::upper_bound(samples.begin(), samples.end(), x);
    t.thresholds_db.push_back(x_db);
    t.probability.push_back(static_cast<double>(above) / static_cast<double>(samples.size()));
  }
  return t;
}

/// Smallest sample value x with empirical P(PAPR > x) <= p.
inline double ccdf_quantile(std::vector<double> samples, double p) {
  require(!samples.empty() && p > 0.0 && p < 1.0, "quantile needs samples and p in (0,1)");
  std::ranges::sort(samples);
  const auto n = samples.size();
  auto allowed_above = static_cast<std::size_t>(std::floor(p * static_cast<double>(n)));
  if (allowed_above >= n) allowed_above = n - 1;
  return samples[n - 1 - allowed_above];
}

}  // namespace damisac
