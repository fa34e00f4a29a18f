#pragma once

// Echo synthesis, delay-Doppler matched filtering, empirical and asymptotic
// delay-Doppler correlation matrices (DDCM) / ambiguity functions (AF), and
// the scalar sensing metrics (SNR, PSR, ISR).

#include "damisac/channel.hpp"
#include "damisac/common.hpp"
#include "damisac/parallel.hpp"
#include "damisac/random.hpp"
#include "damisac/waveform.hpp"

#include <map>
#include <utility>
#include <vector>

namespace damisac {

/// Delay bins in taps and Doppler bins in Hz, both strictly increasing.
struct DelayDopplerGrid {
  std::vector<int> delay_bins;
  std::vector<double> doppler_bins;

  void validate(int max_delay) const {
    require(!delay_bins.empty() && !doppler_bins.empty(), "grid must be nonempty");
    for (std::size_t i = 0; i < delay_bins.size(); ++i) {
      require(delay_bins[i] >= 0 && delay_bins[i] <= max_delay, "delay bin outside the unambiguous region");
      if (i > 0) require(delay_bins[i] > delay_bins[i - 1], "delay bins must be strictly increasing");
    }
    for (std::size_t q = 1; q < doppler_bins.size(); ++q)
      require(doppler_bins[q] > doppler_bins[q - 1], "Doppler bins must be strictly increasing");
  }

  /// Delays [0, guard]; Doppler step 1/(oversample N Ts) spanning +-B/(2 decim).
  static DelayDopplerGrid standard(int guard_len, int cpi_len, double ts, int decim = 1, int oversample = 1) {
    require(decim >= 1 && oversample >= 1, "decimation and oversampling must be >= 1");
    DelayDopplerGrid g;
    for (int d = 0; d <= guard_len; ++d) g.delay_bins.push_back(d);
    const double step = 1.0 / (oversample * cpi_len * ts);
    const double half_span = 1.0 / (2.0 * ts * decim);
    const int q_max = static_cast<int>(std::floor(half_span / step));
    for (int q = -q_max; q <= q_max; ++q) g.doppler_bins.push_back(q * step);
    return g;
  }
};

/// Known transmit stream projected on the target direction, u[n] = a^H x[n].
struct ReferenceStream {
  CVec samples;
  int history = 0;

  static ReferenceStream from(const TxFrame& tx, const CVec& steering) {
    return {project(tx, steering), tx.history};
  }
  int length() const { return static_cast<int>(samples.size()) - history; }
  cplx operator[](int n) const { return samples(n + history); }
};

struct EchoFrame {
  CVec samples;  // y[n], n in [0, N-1], guard samples already discarded
  double noise_power = 0.0;
};

enum class SurfaceKind { Empirical, Asymptotic };

struct AmbiguitySurface {
  std::vector<int> delays;      // d_tau (or tau_p) in taps
  std::vector<double> dopplers; // d_nu (or nu_q) in Hz
  CMat values;                  // delays.size() x dopplers.size()
  SurfaceKind kind = SurfaceKind::Asymptotic;
};

/// y[n] = alpha u[n - tau] e^{j 2 pi nu n Ts} + z[n]. The reference history is the guard
/// interval: samples before n = 0 are received but discarded.
inline EchoFrame synth_echo(const ReferenceStream& ref, const SensingTarget& target, double sigma2, double ts,
                            std::uint64_t seed) {
  require(target.delay_taps >= 0, "target delay must be nonnegative");
  if (target.delay_taps > ref.history)
    throw InvalidArgument("target delay " + std::to_string(target.delay_taps) + " exceeds the guard interval " +
                          std::to_string(ref.history) + "; echo would alias across blocks");
  require(sigma2 >= 0.0, "noise power must be nonnegative");
  const int n_len = ref.length();
  EchoFrame echo{CVec(n_len), sigma2};
  Rng rng(seed);
  const double w = 2.0 * kPi * target.doppler_hz * ts;
  for (int n = 0; n < n_len; ++n) {
    cplx v = target.gain * ref[n - target.delay_taps] * std::polar(1.0, w * n);
    if (sigma2 > 0.0) v += complex_normal(rng, sigma2);
    echo.samples(n) = v;
  }
  return echo;
}

inline EchoFrame synth_echo(const TxFrame& tx, const SensingTarget& target, double sigma2, double ts,
                            std::uint64_t seed) {
  return synth_echo(ReferenceStream::from(tx, steering_vector(tx.num_antennas(), target.direction_rad)), target,
                    sigma2, ts, seed);
}

namespace detail {
/// sum_n w[n] e^{j 2 pi f n Ts} with a re-anchored phasor recursion.
inline cplx rotated_sum(const CVec& w, double f, double ts) {
  const double step = 2.0 * kPi * f * ts;
  const cplx rot = std::polar(1.0, step);
  cplx acc{0.0, 0.0};
  cplx ph{1.0, 0.0};
  const Eigen::Index n_len = w.size();
  for (Eigen::Index n = 0; n < n_len; ++n) {
    if ((n & 1023) == 0) ph = std::polar(1.0, step * static_cast<double>(n));
    acc += w(n) * ph;
    ph *= rot;
  }
  return acc;
}
}  // namespace detail

/// r(tau_p, nu_q) = sum_n y[n] h*[n] with h the unit-norm delayed, Doppler-rotated reference.
inline CMat matched_filter_map(const EchoFrame& echo, const ReferenceStream& ref, const DelayDopplerGrid& grid,
                               double ts) {
  grid.validate(ref.history);
  const auto n_len = echo.samples.size();
  require(n_len <= ref.length(), "reference shorter than the echo");
  const auto p_count = grid.delay_bins.size();
  const auto q_count = grid.doppler_bins.size();
  CMat out(static_cast<Eigen::Index>(p_count), static_cast<Eigen::Index>(q_count));
  parallel_for(p_count, [&](std::size_t p) {
    const int tau_p = grid.delay_bins[p];
    CVec w(n_len);
    double energy = 0.0;
    for (Eigen::Index n = 0; n < n_len; ++n) {
      const cplx u = ref[static_cast<int>(n) - tau_p];
      energy += std::norm(u);
      w(n) = echo.samples(n) * std::conj(u);
    }
    if (!(energy > 0.0)) throw InvalidArgument("reference has zero energy at delay bin " + std::to_string(tau_p));
    const double inv_norm = 1.0 / std::sqrt(energy);
    for (std::size_t q = 0; q < q_count; ++q)
      out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) =
          detail::rotated_sum(w, -grid.doppler_bins[q], ts) * inv_norm;
  });
  return out;
}

/// Argmax of |r| over the grid; ties go to the smallest delay bin, then the smallest Doppler bin.
inline std::pair<int, double> estimate_target(const CMat& mf_map, const DelayDopplerGrid& grid) {
  require(mf_map.size() > 0, "matched-filter map is empty");
  require(mf_map.rows() == static_cast<Eigen::Index>(grid.delay_bins.size()) &&
              mf_map.cols() == static_cast<Eigen::Index>(grid.doppler_bins.size()),
          "map does not match the grid");
  Eigen::Index bp = 0, bq = 0;
  double best = -1.0;
  for (Eigen::Index p = 0; p < mf_map.rows(); ++p)
    for (Eigen::Index q = 0; q < mf_map.cols(); ++q)
      if (std::abs(mf_map(p, q)) > best) {
        best = std::abs(mf_map(p, q));
        bp = p;
        bq = q;
      }
  return {grid.delay_bins[static_cast<std::size_t>(bp)], grid.doppler_bins[static_cast<std::size_t>(bq)]};
}

/// Normalized empirical AF chi(tau_p, nu_q; tau, nu) over the grid, time origin n in [0, N-1].
/// Each bin is normalized by its own reference energy.
inline AmbiguitySurface empirical_af(const ReferenceStream& ref, int tau, double nu, const DelayDopplerGrid& grid,
                                     int cpi_len, double ts) {
  require(cpi_len >= 1 && cpi_len <= ref.length(), "CPI length must fit in the reference");
  require(tau >= 0 && tau <= ref.history, "ground-truth delay outside the reference history");
  grid.validate(ref.history);
  AmbiguitySurface s{grid.delay_bins, grid.doppler_bins,
                     CMat(static_cast<Eigen::Index>(grid.delay_bins.size()),
                          static_cast<Eigen::Index>(grid.doppler_bins.size())),
                     SurfaceKind::Empirical};
  parallel_for(grid.delay_bins.size(), [&](std::size_t p) {
    const int tau_p = grid.delay_bins[p];
    CVec w(cpi_len);
    double den = 0.0;
    for (int n = 0; n < cpi_len; ++n) {
      const cplx u_ref = ref[n - tau_p];
      den += std::norm(u_ref);
      w(n) = ref[n - tau] * std::conj(u_ref);
    }
    if (!(den > 0.0)) throw InvalidArgument("reference has zero energy at delay bin " + std::to_string(tau_p));
    for (std::size_t q = 0; q < grid.doppler_bins.size(); ++q)
      s.values(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) =
          detail::rotated_sum(w, nu - grid.doppler_bins[q], ts) / den;
  });
  return s;
}

/// [Lambda]_{ij} = N^-1 sum_{n=0}^{N-1} s[n-k_i-tau] s*[n-k_j-tau_p] e^{j 2 pi (nu-nu_q) n Ts}.
inline CMat empirical_ddcm(const SymbolFrame& frame, std::span<const int> kappas, int tau_p, double nu_q, int tau,
                           double nu, double ts) {
  const int num_paths = static_cast<int>(kappas.size());
  const int k_max = *std::ranges::max_element(kappas);
  require(tau >= 0 && tau_p >= 0, "delays must be nonnegative");
  require(frame.pad() >= k_max + std::max(tau, tau_p), "symbol pad too small for the requested shifts");
  const int n_len = frame.length();
  CMat lam(num_paths, num_paths);
  CVec w(n_len);
  for (int i = 0; i < num_paths; ++i) {
    for (int j = 0; j < num_paths; ++j) {
      for (int n = 0; n < n_len; ++n) w(n) = frame[n - kappas[i] - tau] * std::conj(frame[n - kappas[j] - tau_p]);
      lam(i, j) = detail::rotated_sum(w, nu - nu_q, ts) / static_cast<double>(n_len);
    }
  }
  return lam;
}

/// Aliased sinc with linear phase: psi(d_nu) = N^-1 sum_{n=0}^{N-1} e^{j 2 pi d_nu n Ts}.
inline cplx asinc(double d_nu, int n, double ts) {
  const double x = d_nu * ts;
  const double den = static_cast<double>(n) * std::sin(kPi * x);
  if (std::abs(std::sin(kPi * x)) < 1e-12) return {1.0, 0.0};
  return std::polar(1.0, kPi * x * (n - 1)) * (std::sin(kPi * x * n) / den);
}

struct DelayDiffSets {
  Eigen::MatrixXi delta;                                  // Delta_{ij} = kappa_i - kappa_j
  std::map<int, std::vector<std::pair<int, int>>> sets;  // d_tau -> (i, j), zero-based

  const std::vector<std::pair<int, int>>& at(int d_tau) const {
    static const std::vector<std::pair<int, int>> empty;
    const auto it = sets.find(d_tau);
    return it == sets.end() ? empty : it->second;
  }
};

inline DelayDiffSets delay_diff_sets(std::span<const int> kappas) {
  const int num_paths = static_cast<int>(kappas.size());
  DelayDiffSets out;
  out.delta.resize(num_paths, num_paths);
  for (int i = 0; i < num_paths; ++i)
    for (int j = 0; j < num_paths; ++j) {
      out.delta(i, j) = kappas[i] - kappas[j];
      if (i != j) out.sets[out.delta(i, j)].emplace_back(i, j);
    }
  return out;
}

/// Large-N limit of the DDCM: psi(d_nu) where kappa_i - kappa_j = d_tau, else 0.
inline CMat asymptotic_ddcm(std::span<const int> kappas, int d_tau, double d_nu, int n, double ts) {
  const int num_paths = static_cast<int>(kappas.size());
  const cplx psi = asinc(d_nu, n, ts);
  CMat lam = CMat::Zero(num_paths, num_paths);
  for (int i = 0; i < num_paths; ++i)
    for (int j = 0; j < num_paths; ++j)
      if (kappas[i] - kappas[j] == d_tau) lam(i, j) = psi;
  return lam;
}

/// a^H F F^H a = sum_l |a^H f_l|^2.
inline double beam_gain(const BeamformerSet& bf, const CVec& a) {
  return (a.adjoint() * bf.vectors).squaredNorm();
}

/// Doppler-cut chi(d_tau, 0) = a^H (sum_{S(d_tau)} f_i f_j^H) a / a^H F F^H a.
inline cplx doppler_cut_af(const BeamformerSet& bf, const CVec& a, int d_tau) {
  const double den = beam_gain(bf, a);
  if (!(den > 1e-300)) throw InvalidArgument("beamformer is orthogonal to the target steering vector");
  if (d_tau == 0) return {1.0, 0.0};
  const Eigen::RowVectorXcd x = a.adjoint() * bf.vectors;  // x_l = a^H f_l
  cplx num{0.0, 0.0};
  for (int i = 0; i < bf.num_paths(); ++i)
    for (int j = 0; j < bf.num_paths(); ++j)
      if (i != j && bf.kappas[i] - bf.kappas[j] == d_tau) num += x(i) * std::conj(x(j));
  return num / den;
}

/// Four-case asymptotic AF: chi(d_tau, d_nu) = chi(d_tau, 0) chi(0, d_nu).
inline cplx asymptotic_af(const BeamformerSet& bf, const CVec& a, int d_tau, double d_nu, int n, double ts) {
  const cplx delay_part = doppler_cut_af(bf, a, d_tau);
  if (d_nu == 0.0) return delay_part;
  return delay_part * asinc(d_nu, n, ts);
}

inline AmbiguitySurface asymptotic_af_surface(const BeamformerSet& bf, const CVec& a, const std::vector<int>& d_taus,
                                              const std::vector<double>& d_nus, int n, double ts) {
  AmbiguitySurface s{d_taus, d_nus,
                     CMat(static_cast<Eigen::Index>(d_taus.size()), static_cast<Eigen::Index>(d_nus.size())),
                     SurfaceKind::Asymptotic};
  for (std::size_t p = 0; p < d_taus.size(); ++p)
    for (std::size_t q = 0; q < d_nus.size(); ++q)
      s.values(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) =
          asymptotic_af(bf, a, d_taus[p], d_nus[q], n, ts);
  return s;
}

/// gamma = |alpha|^2 N a^H F F^H a / sigma^2.
inline double sensing_snr(const BeamformerSet& bf, const CVec& a, double alpha_sq, int n, double sigma2) {
  require(sigma2 > 0.0, "noise power must be positive");
  return alpha_sq * static_cast<double>(n) * beam_gain(bf, a) / sigma2;
}

/// Peak of |chi(0, d_nu)| outside the mainlobe |d_nu| < 1/(N Ts), as a linear magnitude ratio.
inline double psr_doppler(std::span<const double> d_nus, std::span<const cplx> delay_cut, int n, double ts) {
  require(d_nus.size() == delay_cut.size() && !d_nus.empty(), "delay cut and axis size mismatch");
  const double first_null = 1.0 / (static_cast<double>(n) * ts);
  double peak = 0.0;
  bool any = false;
  for (std::size_t q = 0; q < d_nus.size(); ++q) {
    if (std::abs(d_nus[q]) >= first_null * (1.0 - 1e-12)) {
      peak = std::max(peak, std::abs(delay_cut[q]));
      any = true;
    }
  }
  require(any, "delay cut has no samples outside the mainlobe");
  return peak;
}

/// Phi_ISR = sum_{0 < |d_tau| <= n_d} |chi(d_tau, 0)|^2, n_d the kappa spread.
inline double isr(const BeamformerSet& bf, const CVec& a) {
  const int n_d = bf.max_kappa() - *std::ranges::min_element(bf.kappas);
  double acc = 0.0;
  for (int d = -n_d; d <= n_d; ++d)
    if (d != 0) acc += std::norm(doppler_cut_af(bf, a, d));
  return acc;
}

/// Peak sidelobe of a sampled profile relative to its peak (linear magnitude ratio).
/// The mainlobe extends from the peak to the first local minimum on each side.
inline double profile_psr(std::span<const double> mags, bool circular = false) {
  const auto n = static_cast<std::ptrdiff_t>(mags.size());
  require(n >= 3, "profile too short for a sidelobe measurement");
  const auto peak_it = std::ranges::max_element(mags);
  const std::ptrdiff_t pk = peak_it - mags.begin();
  const double peak = *peak_it;
  require(peak > 0.0, "profile is identically zero");
  auto idx = [&](std::ptrdiff_t i) { return circular ? ((i % n) + n) % n : i; };
  auto inside = [&](std::ptrdiff_t i) { return circular || (i >= 0 && i < n); };
  std::vector<bool> mainlobe(static_cast<std::size_t>(n), false);
  mainlobe[static_cast<std::size_t>(pk)] = true;
  for (int dir : {-1, 1}) {
    std::ptrdiff_t i = pk;
    for (std::ptrdiff_t steps = 0; steps < n / 2; ++steps) {
      const std::ptrdiff_t nxt = i + dir;
      if (!inside(nxt)) break;
      if (mags[static_cast<std::size_t>(idx(nxt))] > mags[static_cast<std::size_t>(idx(i))]) break;
      mainlobe[static_cast<std::size_t>(idx(nxt))] = true;
      i = nxt;
    }
  }
  double side = 0.0;
  for (std::ptrdiff_t i = 0; i < n; ++i)
    if (!mainlobe[static_cast<std::size_t>(i)]) side = std::max(side, mags[static_cast<std::size_t>(i)]);
  return side / peak;
}

inline double mag_db(double linear_magnitude) { return 20.0 * std::log10(linear_magnitude); }

}  // namespace damisac
