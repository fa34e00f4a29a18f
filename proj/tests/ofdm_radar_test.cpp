#include "damisac/ofdm_radar.hpp"
#include "damisac/sensing.hpp"

#include <gtest/gtest.h>

using namespace damisac;

namespace {

OfdmConfig small_cfg(int k = 64, int cp = 16, int sym = 8) { return OfdmConfig{k, cp, sym, 1.0 / 122.88e6}; }

}  // namespace

TEST(OfdmConfig, FittingAndSpacing) {
  const auto c = OfdmConfig::fitting(100000, 2048, 400, 1e-8);
  EXPECT_EQ(c.num_symbols, 40);
  EXPECT_EQ(c.block_len(), 40 * 2448);
  const OfdmConfig f{2048, 492, 48, 1.0 / 122.88e6};
  EXPECT_NEAR(f.subcarrier_spacing(), 60e3, 1e-6);
}

TEST(OfdmConfig, FiftyMetersPerSecondDopplerRatio) {
  const double nu = doppler_from_velocity(28e9, 50.0);
  EXPECT_NEAR(nu, 9.33e3, 0.02e3);
  EXPECT_NEAR(nu / 60e3, 0.1555, 0.001);
}

TEST(OfdmEcho, StaticNoiselessIsScaledData) {
  const auto cfg = small_cfg();
  const double th = 0.3;
  const CMat w = aligned_precoders(cfg, 4, th, 1.0);
  const CMat data = random_ofdm_data(Constellation::make(Modulation::QAM16), cfg.num_symbols, cfg.num_subcarriers, 2);
  const cplx alpha{0.2, -0.1};
  const CMat r = ofdm_echo_subcarriers(cfg, w, data, SensingTarget{th, 0, 0.0, alpha}, 0.0, 1);
  const CVec a = steering_vector(4, th);
  for (int i = 0; i < cfg.num_symbols; ++i)
    for (int k = 0; k < cfg.num_subcarriers; ++k)
      EXPECT_NEAR(std::abs(r(i, k) - alpha * a.dot(w.col(k)) * data(i, k)), 0.0, 1e-12);
}

TEST(OfdmEcho, NoiseVariancePerSubcarrierIsSigma2OverK) {
  const auto cfg = small_cfg(256, 16, 64);
  const CMat w = aligned_precoders(cfg, 2, 0.0, 1.0);
  const CMat data = CMat::Ones(cfg.num_symbols, cfg.num_subcarriers);
  const double sigma2 = 3.0;
  const CMat r = ofdm_echo_subcarriers(cfg, w, data, SensingTarget{0.0, 0, 0.0, {0, 0}}, sigma2, 7);
  const double var = r.cwiseAbs2().mean();
  EXPECT_NEAR(var / (sigma2 / cfg.num_subcarriers), 1.0, 0.03);
}

TEST(OfdmEcho, DelayBeyondCpRejected) {
  const auto cfg = small_cfg();
  const CMat w = aligned_precoders(cfg, 2, 0.0, 1.0);
  const CMat data = CMat::Ones(cfg.num_symbols, cfg.num_subcarriers);
  EXPECT_THROW(ofdm_echo_subcarriers(cfg, w, data, SensingTarget{0.0, 17, 0.0, {1, 0}}, 0.0, 1), InvalidArgument);
}

TEST(OfdmEstimate, RecoversEveryDelayUpToCp) {
  const auto cfg = small_cfg(128, 32, 4);
  const CMat w = aligned_precoders(cfg, 2, 0.1, 1.0);
  const CMat data = random_ofdm_data(Constellation::make(Modulation::QAM64), cfg.num_symbols, cfg.num_subcarriers, 3);
  for (int tau = 0; tau <= cfg.cp_len; ++tau) {
    const CMat r = ofdm_echo_subcarriers(cfg, w, data, SensingTarget{0.1, tau, 0.0, {1, 0}}, 0.0, 1);
    EXPECT_EQ(ofdm_estimate(cfg, r, data).tau_hat, tau);
  }
}

TEST(OfdmEstimate, DelayTwelveAndDopplerBin) {
  const auto cfg = small_cfg(256, 32, 32);
  const CMat w = aligned_precoders(cfg, 1, 0.0, 1.0);
  const CMat data = random_ofdm_data(Constellation::make(Modulation::QPSK), cfg.num_symbols, cfg.num_subcarriers, 4);
  const double nu = 3.0 / (cfg.num_symbols * cfg.symbol_duration());
  const CMat r = ofdm_echo_subcarriers(cfg, w, data, SensingTarget{0.0, 12, nu, {1, 0}}, 0.0, 1);
  const auto est = ofdm_estimate(cfg, r, data);
  EXPECT_EQ(est.tau_hat, 12);
  EXPECT_NEAR(est.nu_hat_hz, nu, 1e-6);
}

TEST(OfdmEstimate, ZeroDataRejected) {
  const auto cfg = small_cfg();
  CMat data = CMat::Ones(cfg.num_symbols, cfg.num_subcarriers);
  data(1, 2) = 0.0;
  EXPECT_THROW(ofdm_estimate(cfg, data, data), InvalidArgument);
}

TEST(OfdmEstimate, RangeProfileEnergyIsPreserved) {
  // Parseval across the range IDFT: sum_tau |profile|^2 = K sum_k |rhat[k]|^2.
  const auto cfg = small_cfg(256, 16, 2);
  const CMat w = aligned_precoders(cfg, 2, 0.2, 1.0);
  const CMat data = random_ofdm_data(Constellation::make(Modulation::QAM16), cfg.num_symbols, cfg.num_subcarriers, 5);
  const CMat r = ofdm_echo_subcarriers(cfg, w, data, SensingTarget{0.2, 5, 4e4, {1, 0}}, 0.01, 9);
  const auto est = ofdm_estimate(cfg, r, data);
  const double lhs = est.profiles.range_profile.squaredNorm();
  const double rhs = cfg.num_subcarriers * r.row(0).cwiseQuotient(data.row(0)).squaredNorm();
  EXPECT_NEAR(lhs / rhs, 1.0, 1e-10);
}

TEST(OfdmEstimate, HammingLowersSidelobesAndWidensMainlobe) {
  // Off-grid target: dividing by a ramped copy of the data shifts rhat by a quarter range bin. Without zero
  // padding the sampled kernel has no visible nulls, so sidelobes and mainlobe width are measured as energy
  // shares: leakage beyond +-3 bins of the peak, and the share held by the peak bin alone.
  const auto cfg = small_cfg(256, 32, 4);
  const CMat w = aligned_precoders(cfg, 1, 0.0, 1.0);
  const CMat data = random_ofdm_data(Constellation::make(Modulation::QPSK), cfg.num_symbols, cfg.num_subcarriers, 6);
  const CMat r = ofdm_echo_subcarriers(cfg, w, data, SensingTarget{0.0, 9, 0.0, {1, 0}}, 0.0, 1);
  CMat ramped = data;
  for (int k = 0; k < cfg.num_subcarriers; ++k) ramped.col(k) *= std::polar(1.0, -0.5 * kPi * k / cfg.num_subcarriers);
  struct Shares {
    double far, peak;
  };
  auto shares = [&](Window win) {
    const RVec p = ofdm_estimate(cfg, r, ramped, {win, false}).profiles.range_profile.cwiseAbs2();
    Eigen::Index pk = 0;
    p.maxCoeff(&pk);
    const auto k = p.size();
    double far = 0;
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto d = std::min((i - pk + k) % k, (pk - i + k) % k);
      if (d > 3) far += p(i);
    }
    return Shares{far / p.sum(), p(pk) / p.sum()};
  };
  const Shares plain = shares(Window::None), ham = shares(Window::Hamming);
  EXPECT_LT(ham.far, 0.1 * plain.far);
  EXPECT_LT(ham.peak, plain.peak);
}

TEST(OfdmSnr, ClosedFormReductions) {
  const OfdmConfig one{1, 0, 1, 1e-8};
  EXPECT_NEAR(ofdm_max_sensing_snr(one, 8, 0.5, 2.0, 4.0), 2.0 * 8 * 0.5 / 4.0, 1e-15);
  const auto cfg = OfdmConfig::fitting(100000, 2048, 400, 1e-8);
  const double p_max = 1.0, alpha_sq = 2.254e-17, sigma2 = dbm_to_watt(-89);
  const double g = ofdm_max_sensing_snr(cfg, 64, p_max / 2048, alpha_sq, sigma2);
  EXPECT_NEAR(g / (alpha_sq * 64 * cfg.num_symbols * p_max / sigma2), 1.0, 1e-12);
  // Aligned precoders reach the closed form.
  const CMat w = aligned_precoders(cfg, 64, 0.4, p_max / 2048);
  EXPECT_NEAR(ofdm_sensing_snr(cfg, w, 0.4, alpha_sq, sigma2) / g, 1.0, 1e-10);
}

TEST(OfdmSnr, DamToOfdmRatio) {
  // gamma_DAM / gamma_OFDM = N / (L I) under P' = P/K (OFDM) and P/L (DAM).
  const int n = 99600, l = 3, m = 64;
  const auto cfg = OfdmConfig::fitting(100000, 2048, 400, 1e-8);
  const double a2 = 1e-17, s2 = 1e-12, p = 1.0;
  const double dam = a2 * n * m * (p / l) / s2;
  const double ofdm = ofdm_max_sensing_snr(cfg, m, p / 2048, a2, s2);
  EXPECT_NEAR(dam / ofdm, static_cast<double>(n) / (l * cfg.num_symbols), 1e-9);
  EXPECT_GT(dam / ofdm, 1.0);
}
