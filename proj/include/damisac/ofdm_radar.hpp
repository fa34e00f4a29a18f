#pragma once

// FFT-based OFDM radar baseline. The echo is simulated in the time domain
// (delay, per-sample Doppler rotation, noise, CP removal, per-symbol DFT), so
// inter-carrier interference appears on its own when the Doppler shift is a
// sizeable fraction of the subcarrier spacing.

#include "damisac/channel.hpp"
#include "damisac/common.hpp"
#include "damisac/parallel.hpp"
#include "damisac/random.hpp"
#include "damisac/waveform.hpp"

#include <unsupported/Eigen/FFT>

#include <vector>

namespace damisac {

struct OfdmConfig {
  int num_subcarriers = 2048;  // K
  int cp_len = 492;            // N_p
  int num_symbols = 48;        // I
  double sample_period = 1.0 / 122.88e6;

  double subcarrier_spacing() const { return 1.0 / (num_subcarriers * sample_period); }
  int symbol_len() const { return num_subcarriers + cp_len; }
  double symbol_duration() const { return symbol_len() * sample_period; }  // T_o
  int block_len() const { return symbol_len() * num_symbols; }              // N_c

  void validate() const {
    require(is_power_of_two(num_subcarriers), "num_subcarriers must be a power of two");
    require(cp_len >= 0 && cp_len <= num_subcarriers, "cp_len must lie in [0, K]");
    require(num_symbols >= 1, "num_symbols must be >= 1");
    require(sample_period > 0, "sample_period must be positive");
  }

  /// As many whole symbols as fit in a block of block_len samples.
  static OfdmConfig fitting(int block_len, int num_subcarriers, int cp_len, double sample_period) {
    OfdmConfig c{num_subcarriers, cp_len, 0, sample_period};
    c.num_symbols = block_len / c.symbol_len();
    c.validate();
    return c;
  }
};

enum class Window { None, Hamming };

inline Window parse_window(std::string_view s) {
  if (s == "none") return Window::None;
  if (s == "hamming") return Window::Hamming;
  throw InvalidArgument("unknown window '" + std::string(s) + "' (expected none|hamming)");
}

inline const char* to_string(Window w) { return w == Window::Hamming ? "hamming" : "none"; }

inline RVec window_taps(Window w, int n) {
  RVec t = RVec::Ones(n);
  if (w == Window::Hamming && n > 1)
    for (int i = 0; i < n; ++i) t(i) = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (n - 1));
  return t;
}

/// w_k = sqrt(P_t' / (K M)) a(theta) for every k: all subcarriers steered at the target.
inline CMat aligned_precoders(const OfdmConfig& cfg, int num_antennas, double theta_rad, double avg_power) {
  const CVec a = steering_vector(num_antennas, theta_rad);
  const double amp = std::sqrt(avg_power / (static_cast<double>(cfg.num_subcarriers) * num_antennas));
  return (amp * a).replicate(1, cfg.num_subcarriers);
}

/// r_i[k]: DFT (scaled 1/K) of the i-th received symbol after CP removal.
/// Time-domain model r_i[n] = alpha a^H x_i[n - tau] e^{j 2 pi nu (i T_o + n Ts)} + z_i[n].
inline CMat ofdm_echo_subcarriers(const OfdmConfig& cfg, const CMat& precoders, const CMat& data,
                                  const SensingTarget& target, double sigma2, std::uint64_t seed) {
  cfg.validate();
  require(precoders.cols() == cfg.num_subcarriers, "precoders must have K columns");
  require(data.rows() == cfg.num_symbols && data.cols() == cfg.num_subcarriers, "data must be I x K");
  require(target.delay_taps >= 0, "target delay must be nonnegative");
  if (target.delay_taps > cfg.cp_len)
    throw InvalidArgument("target delay " + std::to_string(target.delay_taps) + " exceeds the cyclic prefix " +
                          std::to_string(cfg.cp_len));
  require(sigma2 >= 0.0, "noise power must be nonnegative");

  const TxFrame tx = ofdm_modulate(precoders, data, cfg.cp_len);
  const CVec u = project(tx, steering_vector(static_cast<int>(precoders.rows()), target.direction_rad));
  const int k_len = cfg.num_subcarriers;
  const double ts = cfg.sample_period;
  CMat out(cfg.num_symbols, k_len);
  parallel_for(static_cast<std::size_t>(cfg.num_symbols), [&](std::size_t si) {
    const int i = static_cast<int>(si);
    Rng rng(derive_seed(seed, si));
    std::vector<cplx> body(static_cast<std::size_t>(k_len));
    const Eigen::Index start = static_cast<Eigen::Index>(i) * cfg.symbol_len() + cfg.cp_len;
    const double sym_time = i * cfg.symbol_duration();
    for (int n = 0; n < k_len; ++n) {
      const Eigen::Index g = start + n - target.delay_taps;
      cplx v = target.gain * u(g) * std::polar(1.0, 2.0 * kPi * target.doppler_hz * (sym_time + n * ts));
      if (sigma2 > 0.0) v += complex_normal(rng, sigma2);
      body[static_cast<std::size_t>(n)] = v;
    }
    Eigen::FFT<double> fft;
    std::vector<cplx> spec;
    fft.fwd(spec, body);
    for (int k = 0; k < k_len; ++k) out(i, k) = spec[static_cast<std::size_t>(k)] / static_cast<double>(k_len);
  });
  return out;
}

struct RangeDopplerProfiles {
  CVec range_profile;                // indexed by tau_p = 0..K-1
  CVec doppler_profile;              // indexed like doppler_bins_hz
  std::vector<double> doppler_bins_hz;
  Window window = Window::None;
  bool averaged = false;             // extension: periodogram averaged over all symbols / subcarriers
};

struct OfdmEstimate {
  RangeDopplerProfiles profiles;
  int tau_hat = 0;
  double nu_hat_hz = 0.0;
};

struct OfdmEstimateOptions {
  Window window = Window::None;
  /// Extension beyond the textbook processing, which uses only symbol 0 for range and subcarrier 0 for
  /// Doppler: averages the power profiles over every symbol / subcarrier. Off by default.
  bool averaged_periodogram = false;
};

/// Element-wise division, range IDFT over k and Doppler DFT over i, each after an optional window.
inline OfdmEstimate ofdm_estimate(const OfdmConfig& cfg, const CMat& r, const CMat& data,
                                  const OfdmEstimateOptions& opt = {}) {
  cfg.validate();
  require(r.rows() == cfg.num_symbols && r.cols() == cfg.num_subcarriers, "echo must be I x K");
  require(data.rows() == r.rows() && data.cols() == r.cols(), "data must match the echo shape");
  const int k_len = cfg.num_subcarriers;
  const int i_len = cfg.num_symbols;
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    for (Eigen::Index k = 0; k < data.cols(); ++k)
      if (std::abs(data(i, k)) == 0.0)
        throw InvalidArgument("zero-modulus data cell at symbol " + std::to_string(i) + ", subcarrier " +
                              std::to_string(k));
  const CMat rhat = r.cwiseQuotient(data);
  const RVec wk = window_taps(opt.window, k_len);
  const RVec wi = window_taps(opt.window, i_len);
  Eigen::FFT<double> fft;

  OfdmEstimate est;
  est.profiles.window = opt.window;
  est.profiles.averaged = opt.averaged_periodogram;

  // sum_k rhat[k] e^{j 2 pi k tau_p / K} = K * IDFT.
  auto range_of = [&](Eigen::Index i) {
    std::vector<cplx> in(static_cast<std::size_t>(k_len)), outv;
    for (int k = 0; k < k_len; ++k) in[static_cast<std::size_t>(k)] = rhat(i, k) * wk(k);
    fft.inv(outv, in);
    CVec v(k_len);
    for (int t = 0; t < k_len; ++t) v(t) = outv[static_cast<std::size_t>(t)] * static_cast<double>(k_len);
    return v;
  };
  // Doppler bins q / (I T_o), q in [-floor(I/2), ceil(I/2) - 1], via a length-I DFT reordered to ascend.
  const int q_lo = -(i_len / 2);
  for (int q = 0; q < i_len; ++q) est.profiles.doppler_bins_hz.push_back((q_lo + q) / (i_len * cfg.symbol_duration()));
  auto doppler_of = [&](Eigen::Index k) {
    std::vector<cplx> in(static_cast<std::size_t>(i_len)), outv;
    for (int i = 0; i < i_len; ++i) in[static_cast<std::size_t>(i)] = rhat(i, k) * wi(i);
    fft.fwd(outv, in);
    CVec v(i_len);
    for (int q = 0; q < i_len; ++q) v(q) = outv[static_cast<std::size_t>(((q_lo + q) % i_len + i_len) % i_len)];
    return v;
  };

  if (!opt.averaged_periodogram) {
    est.profiles.range_profile = range_of(0);
    est.profiles.doppler_profile = doppler_of(0);
  } else {
    RVec rp = RVec::Zero(k_len), dp = RVec::Zero(i_len);
    for (int i = 0; i < i_len; ++i) rp += range_of(i).cwiseAbs2();
    for (int k = 0; k < k_len; ++k) dp += doppler_of(k).cwiseAbs2();
    est.profiles.range_profile = (rp / i_len).cwiseSqrt().cast<cplx>();
    est.profiles.doppler_profile = (dp / k_len).cwiseSqrt().cast<cplx>();
  }
  Eigen::Index t_hat = 0, q_hat = 0;
  est.profiles.range_profile.cwiseAbs().maxCoeff(&t_hat);
  est.profiles.doppler_profile.cwiseAbs().maxCoeff(&q_hat);
  est.tau_hat = static_cast<int>(t_hat);
  est.nu_hat_hz = est.profiles.doppler_bins_hz[static_cast<std::size_t>(q_hat)];
  return est;
}

/// gamma = |alpha|^2 M I K P_t' / sigma^2, reached with w_k = sqrt(P_t'/(K M)) a(theta).
inline double ofdm_max_sensing_snr(const OfdmConfig& cfg, int num_antennas, double avg_power, double alpha_sq,
                                   double sigma2) {
  require(sigma2 > 0.0, "noise power must be positive");
  return alpha_sq * num_antennas * static_cast<double>(cfg.num_symbols) * cfg.num_subcarriers * avg_power / sigma2;
}

/// Output SNR at the target bin for arbitrary precoders: |alpha|^2 I sum_k |a^H w_k|^2 / (sigma^2 / K).
inline double ofdm_sensing_snr(const OfdmConfig& cfg, const CMat& precoders, double theta_rad, double alpha_sq,
                               double sigma2) {
  require(sigma2 > 0.0, "noise power must be positive");
  const CVec a = steering_vector(static_cast<int>(precoders.rows()), theta_rad);
  const double gain = (a.adjoint() * precoders).squaredNorm();
  return alpha_sq * cfg.num_symbols * gain * cfg.num_subcarriers / sigma2;
}

}  // namespace damisac
