#include "damisac/waveform.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <unsupported/Eigen/FFT>

using namespace damisac;
using damisac::testing::random_cmat;

TEST(Constellation, UnitAveragePower) {
  for (auto m : {Modulation::QPSK, Modulation::QAM16, Modulation::QAM64}) {
    const auto c = Constellation::make(m);
    double e = 0;
    for (const auto& p : c.points) e += std::norm(p);
    EXPECT_NEAR(e / static_cast<double>(c.points.size()), 1.0, 1e-14);
  }
  EXPECT_NEAR(Constellation::make(Modulation::QPSK).a_max, 1.0, 1e-15);
  EXPECT_NEAR(Constellation::make(Modulation::QAM64).a_max, std::sqrt(98.0 / 42.0), 1e-14);
  EXPECT_THROW(parse_modulation("bpsk"), InvalidArgument);
}

TEST(Kappas, FromDelays) {
  EXPECT_EQ(kappas_from_delays(std::vector<int>{1, 3, 5}), (std::vector<int>{4, 2, 0}));
  EXPECT_EQ(kappas_from_delays(std::vector<int>{7, 18, 11}), (std::vector<int>{11, 0, 7}));
  EXPECT_EQ(kappas_from_delays(std::vector<int>{9}), (std::vector<int>{0}));
  EXPECT_THROW(kappas_from_delays(std::vector<int>{2, 2}), InvalidArgument);
}

TEST(DamModulate, IdentityPrecodingCopiesStream) {
  const auto frame = SymbolFrame::random(Constellation::make(Modulation::QPSK), 50, 0, 3);
  CMat f = CMat::Zero(3, 1);
  f(0, 0) = 1.0;
  const TxFrame tx = dam_modulate(BeamformerSet(f, {0}), frame);
  for (int n = 0; n < 50; ++n) {
    EXPECT_EQ(tx.at(n)(0), frame[n]);
    EXPECT_EQ(tx.at(n)(1), cplx(0, 0));
  }
}

TEST(DamModulate, MatrixFormEqualsPerSampleSum) {
  Rng rng(4);
  const CMat f = random_cmat(rng, 4, 3);
  const std::vector<int> k{5, 0, 2};
  const auto frame = SymbolFrame::random(Constellation::make(Modulation::QAM16), 64, 8, 9);
  const TxFrame tx = dam_modulate(BeamformerSet(f, k), frame, 3);
  for (int n = -3; n < 64; ++n) {
    CVec x = CVec::Zero(4);
    for (int l = 0; l < 3; ++l) x += f.col(l) * frame[n - k[l]];
    EXPECT_LT((tx.at(n) - x).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(DamModulate, Linearity) {
  Rng rng(5);
  const CMat f1 = random_cmat(rng, 3, 2), f2 = random_cmat(rng, 3, 2);
  const auto frame = SymbolFrame::random(Constellation::make(Modulation::QPSK), 40, 4, 2);
  const std::vector<int> k{0, 3};
  const CMat sum = dam_modulate(BeamformerSet(f1 + f2, k), frame).samples;
  const CMat parts = dam_modulate(BeamformerSet(f1, k), frame).samples + dam_modulate(BeamformerSet(f2, k), frame).samples;
  EXPECT_LT((sum - parts).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DamModulate, PadTooSmallRejected) {
  const auto frame = SymbolFrame::random(Constellation::make(Modulation::QPSK), 10, 2, 1);
  EXPECT_THROW(dam_modulate(BeamformerSet(CMat::Ones(2, 2), {0, 3}), frame), InvalidArgument);
}

TEST(DamModulate, AveragePowerMatchesBeamformerPower) {
  Rng rng(6);
  CMat f = random_cmat(rng, 4, 3);
  const double p = f.squaredNorm();
  const auto frame = SymbolFrame::random(Constellation::make(Modulation::QAM64), 100000, 10, 8);
  const TxFrame tx = dam_modulate(BeamformerSet(f, {0, 4, 9}), frame);
  const double emp = tx.samples.squaredNorm() / static_cast<double>(tx.samples.cols());
  EXPECT_NEAR(emp / p, 1.0, 0.01);
}

TEST(OfdmModulate, SingleToneIsDftBasis) {
  const int k = 16, k0 = 3;
  CMat w = CMat::Ones(2, k);
  CMat data = CMat::Zero(1, k);
  data(0, k0) = 1.0;
  const TxFrame tx = ofdm_modulate(w, data, 0);
  for (int n = 0; n < k; ++n)
    for (int m = 0; m < 2; ++m) EXPECT_NEAR(std::abs(tx.samples(m, n) - std::polar(1.0, 2 * kPi * k0 * n / k)), 0, 1e-12);
}

TEST(OfdmModulate, CyclicPrefixBitExact) {
  Rng rng(7);
  const int k = 64, cp = 16, sym = 3;
  const CMat w = random_cmat(rng, 2, k);
  const CMat data = random_ofdm_data(Constellation::make(Modulation::QPSK), sym, k, 1);
  const TxFrame tx = ofdm_modulate(w, data, cp);
  ASSERT_EQ(tx.samples.cols(), sym * (k + cp));
  for (int i = 0; i < sym; ++i)
    for (int n = 0; n < cp; ++n)
      for (int m = 0; m < 2; ++m) EXPECT_EQ(tx.samples(m, i * (k + cp) + n), tx.samples(m, i * (k + cp) + k + n));
}

TEST(OfdmModulate, DemodulationRoundTrip) {
  Rng rng(8);
  const int k = 128, cp = 8, sym = 2;
  CMat w = CMat::Ones(1, k);
  const CMat data = random_ofdm_data(Constellation::make(Modulation::QAM16), sym, k, 2);
  const TxFrame tx = ofdm_modulate(w, data, cp);
  Eigen::FFT<double> fft;
  for (int i = 0; i < sym; ++i) {
    std::vector<cplx> body(k), spec;
    for (int n = 0; n < k; ++n) body[n] = tx.samples(0, i * (k + cp) + cp + n);
    fft.fwd(spec, body);
    double energy_t = 0, energy_f = 0;
    for (int n = 0; n < k; ++n) energy_t += std::norm(body[n]);
    for (int q = 0; q < k; ++q) {
      EXPECT_NEAR(std::abs(spec[q] / static_cast<double>(k) - data(i, q)), 0.0, 1e-12);
      energy_f += std::norm(spec[q] / static_cast<double>(k));
    }
    // Parseval with the 1/K analysis DFT: sum |x[n]|^2 = K sum |X[k]|^2.
    EXPECT_NEAR(energy_t / (k * energy_f), 1.0, 1e-10);
  }
}

TEST(OfdmModulate, RejectsBadShapes) {
  EXPECT_THROW(ofdm_modulate(CMat::Ones(1, 12), CMat::Ones(1, 12), 0), InvalidArgument);
  EXPECT_THROW(ofdm_modulate(CMat::Ones(1, 16), CMat::Ones(1, 8), 0), InvalidArgument);
}

TEST(Papr, ConstantModulusIsOne) {
  TxFrame tx{CMat(1, 64), 0};
  for (int n = 0; n < 64; ++n) tx.samples(0, n) = std::polar(2.0, 0.3 * n);
  EXPECT_NEAR(papr(tx, 16).overall, 1.0, 1e-12);
}

TEST(Papr, SilentAntennaRejected) {
  TxFrame tx{CMat::Zero(2, 8), 0};
  tx.samples.row(0).setOnes();
  EXPECT_THROW(papr(tx, 8), InvalidArgument);
}

TEST(PaprBound, DamCases) {
  CMat f(1, 2);
  f << 1.0, 2.0;
  EXPECT_NEAR(papr_bound_dam(BeamformerSet(f, {0, 1}), 1.0)[0], 9.0 / 5.0, 1e-15);
  CMat cm(3, 5);
  Rng rng(1);
  for (int i = 0; i < cm.size(); ++i) cm(i) = unit_phasor(rng);
  for (double v : papr_bound_dam(BeamformerSet(cm, {0, 1, 2, 3, 4}), 1.0)) EXPECT_NEAR(v, 5.0, 1e-12);
  EXPECT_NEAR(papr_bound_dam(BeamformerSet(CMat::Constant(2, 1, cplx(0, 3)), {0}), 1.3)[0], 1.69, 1e-12);
  EXPECT_THROW(papr_bound_dam(BeamformerSet(CMat::Zero(1, 2), {0, 1}), 1.0), InvalidArgument);
}

TEST(PaprBound, OfdmCases) {
  CMat w(1, 3);
  w << 1.0, 1.0, 2.0;
  EXPECT_NEAR(papr_bound_ofdm(w, 1.0)[0], 16.0 / 6.0, 1e-15);
  CMat cm(2, 2048);
  Rng rng(2);
  for (int i = 0; i < cm.size(); ++i) cm(i) = unit_phasor(rng);
  for (double v : papr_bound_ofdm(cm, 1.0)) EXPECT_NEAR(v, 2048.0, 1e-8);
  EXPECT_NEAR(papr_bound_ofdm(CMat::Ones(1, 1), 1.0)[0], 1.0, 0);
}

TEST(Papr, NeverAboveBoundAndAtLeastOne) {
  Rng rng(3);
  const auto qpsk = Constellation::make(Modulation::QPSK);
  for (int trial = 0; trial < 20; ++trial) {
    const CMat f = random_cmat(rng, 2, 4);
    const auto frame = SymbolFrame::random(qpsk, 256, 8, trial);
    const TxFrame tx = dam_modulate(BeamformerSet(f, {0, 2, 5, 7}), frame);
    const auto bound = papr_bound_dam(BeamformerSet(f, {0, 2, 5, 7}), qpsk.a_max);
    // Normalizing by the expected power |f|^2 E|s|^2 keeps every sample under the coherent bound.
    for (int m = 0; m < 2; ++m) {
      const double mean = f.row(m).squaredNorm();
      double peak = 0;
      for (Eigen::Index c = 0; c < tx.samples.cols(); ++c) peak = std::max(peak, std::norm(tx.samples(m, c)));
      EXPECT_LE(peak / mean, bound[static_cast<std::size_t>(m)] * (1 + 1e-12));
    }
    EXPECT_GE(papr(tx, 256).overall, 1.0);
  }
}

TEST(Papr, AlignedDamApproachesL) {
  // Equal-phase constant-modulus beamformer: coherent addition happens whenever the L symbols coincide
  // (probability 4^-(L-1) under QPSK), so the per-antenna peak reaches L.
  const int l = 5;
  CMat f = CMat::Constant(1, l, cplx(1.0 / std::sqrt(l), 0));
  std::vector<int> k(l);
  for (int i = 0; i < l; ++i) k[i] = i;
  const auto frame = SymbolFrame::random(Constellation::make(Modulation::QPSK), 1000000, l, 21);
  const TxFrame tx = dam_modulate(BeamformerSet(f, k), frame);
  const double p = papr(tx, static_cast<int>(tx.samples.cols())).overall;
  EXPECT_NEAR(lin_to_db(p), lin_to_db(static_cast<double>(l)), 0.5);
}

TEST(PaprCcdf, BasicShape) {
  std::vector<double> s;
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) s.push_back(1.0 + uniform(rng, 0, 9));
  std::vector<double> thr;
  for (int t = 0; t <= 12; ++t) thr.push_back(t);
  const auto c = papr_ccdf(s, thr);
  EXPECT_EQ(c.sample_count, 10000u);
  EXPECT_EQ(c.probability[0], 1.0);
  for (std::size_t i = 1; i < c.probability.size(); ++i) EXPECT_LE(c.probability[i], c.probability[i - 1]);
  EXPECT_EQ(c.probability.back(), 0.0);
  const double q = ccdf_quantile(s, 1e-3);
  EXPECT_GT(q, 9.9);
}
