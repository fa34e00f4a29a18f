#pragma once

// Communication multipath MISO channel, sensing target channel, ULA steering
// vectors and the scenario parameters shared by every module.

#include "damisac/common.hpp"
#include "damisac/random.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

namespace damisac {

struct ScenarioConfig {
  double carrier_freq_hz = 28e9;
  double bandwidth_hz = 100e6;
  double coherence_time_s = 1e-3;
  double guard_time_s = 4e-6;
  double tx_power_w = 1.0;
  double noise_power_w = dbm_to_watt(-89.0);
  int num_tx_antennas = 64;
  int num_paths = 3;
  std::uint64_t rng_seed = 1;

  double sample_period() const { return 1.0 / bandwidth_hz; }
  double wavelength() const { return kSpeedOfLight / carrier_freq_hz; }
  /// Samples per coherence block, N_c.
  int block_len() const { return static_cast<int>(std::lround(coherence_time_s / sample_period())); }
  /// Guard interval in samples, N_p.
  int guard_len() const { return static_cast<int>(std::lround(guard_time_s / sample_period())); }
  /// DAM symbols per block, N = N_c - N_p.
  int cpi_len() const { return block_len() - guard_len(); }

  void validate() const {
    require(carrier_freq_hz > 0 && bandwidth_hz > 0, "carrier and bandwidth must be positive");
    require(coherence_time_s > 0 && guard_time_s > 0, "coherence and guard time must be positive");
    require(guard_time_s < coherence_time_s, "guard time must be shorter than the coherence time");
    require(tx_power_w > 0 && noise_power_w > 0, "powers must be positive");
    require(num_tx_antennas >= 1 && num_paths >= 1, "antenna and path counts must be positive");
    require(cpi_len() > 0, "coherence block leaves no room for symbols after the guard");
  }
};

struct UlaGeometry {
  int num_antennas = 64;
  double element_spacing_wavelengths = 0.5;
};

/// a(theta)_m = exp(j 2 pi d m sin(theta)), phase reference at element 0.
inline CVec steering_vector(const UlaGeometry& geom, double theta_rad) {
  require(geom.num_antennas >= 1, "ULA needs at least one element");
  CVec a(geom.num_antennas);
  const double phase_step = 2.0 * kPi * geom.element_spacing_wavelengths * std::sin(theta_rad);
  for (int m = 0; m < geom.num_antennas; ++m) a(m) = std::polar(1.0, phase_step * m);
  return a;
}

inline CVec steering_vector(int num_antennas, double theta_rad) {
  return steering_vector(UlaGeometry{num_antennas, 0.5}, theta_rad);
}

struct ChannelPath {
  int delay_taps = 0;
  CVec gain;  // h_l, length M
};

class MultipathChannel {
 public:
  explicit MultipathChannel(std::vector<ChannelPath> paths) : paths_(std::move(paths)) {
    require(!paths_.empty(), "channel needs at least one path");
    const auto m = paths_.front().gain.size();
    std::set<int> seen;
    for (const auto& p : paths_) {
      require(p.delay_taps >= 0, "delay taps must be nonnegative");
      require(p.gain.size() == m && m > 0, "all path gains must share the antenna count");
      require(seen.insert(p.delay_taps).second, "path delays must be pairwise distinct");
    }
  }

  int num_paths() const { return static_cast<int>(paths_.size()); }
  int num_antennas() const { return static_cast<int>(paths_.front().gain.size()); }
  const std::vector<ChannelPath>& paths() const { return paths_; }
  const ChannelPath& path(int l) const { return paths_.at(static_cast<std::size_t>(l)); }

  std::vector<int> delays() const {
    std::vector<int> d;
    for (const auto& p : paths_) d.push_back(p.delay_taps);
    return d;
  }
  int max_delay() const { return std::ranges::max(delays()); }
  int min_delay() const { return std::ranges::min(delays()); }
  int delay_spread() const { return max_delay() - min_delay(); }

  /// H = [h_1, ..., h_L], M x L.
  CMat gain_matrix() const {
    CMat h(num_antennas(), num_paths());
    for (int l = 0; l < num_paths(); ++l) h.col(l) = paths_[l].gain;
    return h;
  }

 private:
  std::vector<ChannelPath> paths_;
};

struct SensingTarget {
  double direction_rad = 0.0;
  int delay_taps = 0;
  double doppler_hz = 0.0;
  cplx gain{1.0, 0.0};
};

/// Free-space power gain (lambda / (4 pi R))^2.
inline double free_space_pathloss(double carrier_freq_hz, double distance_m) {
  require(distance_m > 0, "distance must be positive");
  const double lambda = kSpeedOfLight / carrier_freq_hz;
  const double g = lambda / (4.0 * kPi * distance_m);
  return g * g;
}

/// |alpha|^2 = lambda^2 xi / ((4 pi)^3 R^4), radar two-way gain.
inline double sensing_gain_magnitude(double carrier_freq_hz, double range_m, double rcs_m2) {
  require(range_m > 0, "sensing range must be positive");
  require(rcs_m2 >= 0, "radar cross-section must be nonnegative");
  const double lambda = kSpeedOfLight / carrier_freq_hz;
  const double four_pi = 4.0 * kPi;
  return lambda * lambda * rcs_m2 / (four_pi * four_pi * four_pi * std::pow(range_m, 4));
}

inline double doppler_from_velocity(double carrier_freq_hz, double radial_velocity_mps) {
  return 2.0 * radial_velocity_mps * carrier_freq_hz / kSpeedOfLight;
}

inline int delay_taps_from_range(double range_m, double sample_period_s) {
  return static_cast<int>(std::lround(2.0 * range_m / (kSpeedOfLight * sample_period_s)));
}

struct CommChannelParams {
  double distance_m = 100.0;
  int num_subpaths_max = 3;
  double aod_min_rad = deg_to_rad(-50.0);
  double aod_max_rad = deg_to_rad(50.0);
  int delay_tap_min = 0;
  int delay_tap_max = 40;
  double element_spacing_wavelengths = 0.5;
  /// Fixed delays, one per path; drawn when empty.
  std::vector<int> fixed_delays;
  /// Fixed sub-path AoDs per path (outer size L); drawn when empty.
  std::vector<std::vector<double>> fixed_aods_rad;
  /// Per-path power |beta_l|^2 as a function of (fc, distance, L). Defaults to PL(R_c)/L.
  std::function<double(double, double, int)> path_power;
};

/// Per-path power |beta_l|^2 used by gen_comm_channel.
inline double comm_path_power(const ScenarioConfig& cfg, const CommChannelParams& params) {
  if (params.path_power) return params.path_power(cfg.carrier_freq_hz, params.distance_m, cfg.num_paths);
  return free_space_pathloss(cfg.carrier_freq_hz, params.distance_m) / cfg.num_paths;
}

/// h_l = beta_l sum_i mu_l^{-1/2} e^{j phi_li} a(theta_li), with distinct random delay taps.
inline MultipathChannel gen_comm_channel(const ScenarioConfig& cfg, const CommChannelParams& params,
                                         std::uint64_t seed) {
  const int num_paths = cfg.num_paths;
  const int num_antennas = cfg.num_tx_antennas;
  require(params.num_subpaths_max >= 1, "num_subpaths_max must be >= 1");
  Rng rng(seed);

  std::vector<int> delays = params.fixed_delays;
  if (delays.empty()) {
    const int span = params.delay_tap_max - params.delay_tap_min + 1;
    if (params.delay_tap_min < 0 || span < num_paths)
      throw InvalidArgument("delay tap range [" + std::to_string(params.delay_tap_min) + ", " +
                            std::to_string(params.delay_tap_max) + "] cannot hold " +
                            std::to_string(num_paths) + " distinct taps");
    std::vector<int> pool(static_cast<std::size_t>(span));
    std::iota(pool.begin(), pool.end(), params.delay_tap_min);
    // Partial Fisher-Yates: first L entries are a uniform draw without replacement.
    for (int l = 0; l < num_paths; ++l) {
      std::uniform_int_distribution<int> pick(l, span - 1);
      std::swap(pool[l], pool[pick(rng)]);
    }
    delays.assign(pool.begin(), pool.begin() + num_paths);
  }
  require(static_cast<int>(delays.size()) == num_paths, "fixed_delays must have one entry per path");
  require(params.fixed_aods_rad.empty() || static_cast<int>(params.fixed_aods_rad.size()) == num_paths,
          "fixed_aods_rad must have one entry per path");

  const double beta_mag = std::sqrt(comm_path_power(cfg, params));
  const UlaGeometry geom{num_antennas, params.element_spacing_wavelengths};
  std::vector<ChannelPath> paths;
  for (int l = 0; l < num_paths; ++l) {
    std::vector<double> aods;
    if (!params.fixed_aods_rad.empty()) {
      aods = params.fixed_aods_rad[l];
      require(!aods.empty(), "each path needs at least one sub-path AoD");
    } else {
      std::uniform_int_distribution<int> mu_dist(1, params.num_subpaths_max);
      const int mu = mu_dist(rng);
      for (int i = 0; i < mu; ++i) aods.push_back(uniform(rng, params.aod_min_rad, params.aod_max_rad));
    }
    const double weight = 1.0 / std::sqrt(static_cast<double>(aods.size()));
    CVec h = CVec::Zero(num_antennas);
    for (double aod : aods) h += weight * unit_phasor(rng) * steering_vector(geom, aod);
    const cplx beta = beta_mag * unit_phasor(rng);
    paths.push_back({delays[l], beta * h});
  }
  return MultipathChannel(std::move(paths));
}

inline MultipathChannel gen_comm_channel(const ScenarioConfig& cfg, const CommChannelParams& params) {
  return gen_comm_channel(cfg, params, cfg.rng_seed);
}

}  // namespace damisac
