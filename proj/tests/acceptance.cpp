// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below. Exit status 1 if any criterion fails.

#include "damisac/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>

using namespace damisac;

namespace {

// Tolerances.
constexpr double kAfExact = 1e-12;
constexpr double kPsrTarget = -13.2, kPsrTol = 0.3;
constexpr double kSlopeLo = -0.65, kSlopeHi = -0.35;
constexpr double kLiftedRel = 1e-10;
constexpr double kLambdaMaxTol = 1e-6, kCorpusRel = 1e-4;
constexpr double kConstraintRel = 1e-6, kSidelobeMaxDb = -38.0;
constexpr double kMonotoneRel = 1e-6, kPhiVariation = 0.10, kCommOnlyRel = 1e-3;
constexpr double kBoundRel = 1e-12;
constexpr double kOfdmDegradeDb = 10.0, kDamChangeDb = 1.0;
constexpr double kSnrFormulaRel = 1e-12, kMcDb = 0.5, kRatioRel = 1e-9;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

// 1 ---------------------------------------------------------------------------
void af_identities(Outcome& o) {
  const std::vector<int> k{4, 2, 0};
  const double ts = 1e-8;
  o.expect(asymptotic_ddcm(k, 0, 0.0, 1000, ts) == CMat::Identity(3, 3), "Lambda(0,0) = I");
  CMat want = CMat::Zero(3, 3);
  want(0, 1) = want(1, 2) = 1.0;
  o.expect(asymptotic_ddcm(k, 2, 0.0, 1000, ts) == want, "Lambda(2,0) example");
  Rng rng(1);
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    CMat f(8, 3);
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = complex_normal(rng, 1.0);
    const BeamformerSet bf(f, k);
    const CVec a = steering_vector(8, uniform(rng, -1.2, 1.2));
    worst = std::max(worst, std::abs(asymptotic_af(bf, a, 0, 0.0, 1000, ts) - 1.0));
  }
  o.expect(worst <= kAfExact, "chi(0,0) = 1");
  o.detail << "max |chi(0,0) - 1| = " << worst;
}

// 2 ---------------------------------------------------------------------------
void delay_cut_psr(Outcome& o) {
  Config c;
  c.set("af_cpi_lengths=[5000, 10000, 100000]");
  const auto cuts = compute_af(c, 1);
  double prev = kInf;
  for (const auto& cut : cuts) {
    o.detail << "N=" << cut.cpi_len << ": PSR " << cut.delay_psr_db_emp << " dB, floor " << cut.doppler_floor_rms_db
             << " dB; ";
    o.expect(std::abs(cut.delay_psr_db_emp - kPsrTarget) <= kPsrTol, "PSR at N=" + std::to_string(cut.cpi_len));
    o.expect(cut.doppler_floor_rms_db < prev, "floor decreasing at N=" + std::to_string(cut.cpi_len));
    prev = cut.doppler_floor_rms_db;
  }
}

// 3 ---------------------------------------------------------------------------
void ddcm_convergence(Outcome& o) {
  const std::vector<int> k{4, 2, 0};
  const double ts = 1e-8;
  const int tau = 10, seeds = 20;
  std::vector<double> logn, loge;
  for (int n : {1000, 10000, 100000}) {
    const double step = 0.5 / (n * ts);  // half-bin Doppler spacing
    double mean_err = 0;
    for (int s = 0; s < seeds; ++s) {
      const auto frame = SymbolFrame::random(Constellation::make(Modulation::QPSK), n, 4 + 2 * tau,
                                             derive_seed(static_cast<std::uint64_t>(n), s));
      double worst = 0;
      for (int dt = -10; dt <= 10; ++dt)
        for (int q = -10; q <= 10; ++q) {
          const double dnu = q * step;
          const CMat emp = empirical_ddcm(frame, k, tau + dt, 0.0, tau, dnu, ts);
          worst = std::max(worst, (emp - asymptotic_ddcm(k, dt, dnu, n, ts)).cwiseAbs().maxCoeff());
        }
      mean_err += worst / seeds;
    }
    logn.push_back(std::log10(n));
    loge.push_back(std::log10(mean_err));
    o.detail << "N=" << n << ": " << mean_err << "; ";
  }
  // Least-squares slope.
  const double mx = (logn[0] + logn[1] + logn[2]) / 3, my = (loge[0] + loge[1] + loge[2]) / 3;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (logn[i] - mx) * (loge[i] - my);
    sxx += (logn[i] - mx) * (logn[i] - mx);
  }
  const double slope = sxy / sxx;
  o.detail << "slope " << slope;
  o.expect(slope >= kSlopeLo && slope <= kSlopeHi, "slope range");
}

// 4 ---------------------------------------------------------------------------
void lifted_oracle(Outcome& o) {
  Rng rng(4);
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    const int m = 4;
    const int nd = 1 + static_cast<int>(rng() % 4);
    const bool swap = rng() % 2;
    std::vector<ChannelPath> paths{{swap ? nd : 0, CVec(m)}, {swap ? 0 : nd, CVec(m)}};
    for (auto& p : paths)
      for (int i = 0; i < m; ++i) p.gain(i) = complex_normal(rng, 1.0);
    const MultipathChannel ch(paths);
    const double theta = uniform(rng, -1.3, 1.3);
    const auto lp = build_lifted(ch, theta, {1.0, 0.1}, {1.0, 1.0, 1, 1.0}, LiftingMode::Full);
    CMat f(m, 2);
    for (int l = 0; l < 2; ++l) {
      CVec g(m);
      for (int i = 0; i < m; ++i) g(i) = complex_normal(rng, 1.0);
      f.col(l) = lp.projectors.q[l] * g;
    }
    const CVec b = lp.basis.adjoint() * f.reshaped();
    const CMat big_b = b * b.adjoint();
    // Direct form.
    const CVec a = steering_vector(m, theta);
    const cplx x0 = a.dot(f.col(0)), x1 = a.dot(f.col(1));
    const cplx s = ch.path(0).gain.dot(f.col(0)) + ch.path(1).gain.dot(f.col(1));
    const double obj = std::norm(s), pow = f.squaredNorm(), gain = std::norm(x0) + std::norm(x1);
    const double isr_num = 2 * std::norm(x0 * std::conj(x1));  // d = +-nd, one pair each
    // Lifted forms, quadratic and trace.
    const auto v = lifted_values(lp, b);
    double tr_isr = 0;
    for (const auto& g : lp.abar_q) tr_isr += std::norm((g * big_b).trace());
    for (double e : {rel(v.objective, obj), rel(trace_product(lp.hbar, big_b), obj), rel(v.power, pow),
                     rel(trace_product(lp.qbar, big_b), pow), rel(v.beam_gain, gain),
                     rel(trace_product(lp.abar, big_b), gain), rel(v.isr_num, isr_num), rel(tr_isr, isr_num)})
      worst = std::max(worst, e);
  }
  o.detail << "max relative error " << worst;
  o.expect(worst <= kLiftedRel, "lifted vs direct");
}

// 5 ---------------------------------------------------------------------------
CMat random_cmat(Rng& rng, int r, int c) {
  CMat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = complex_normal(rng, 1.0);
  return m;
}

ConicProgram trace_bounded(const CMat& c) {
  ConicProgram p;
  p.objective = HermitianOperand(c);
  p.constraints.push_back({HermitianOperand::identity(static_cast<int>(c.rows())), Sense::LessEqual, 1.0});
  return p;
}

void solver_sanity(Outcome& o) {
  Rng rng(5);
  SolverSettings tight;
  tight.tol = 1e-9;
  tight.max_iters = 200000;
  tight.adaptive_rho = false;  // fixed-rho reference: an adaptation fault cannot hide in both solves
  double lam_err = 0;
  for (int t = 0; t < 5; ++t) {
    const CMat g = random_cmat(rng, 6, 6);
    const CMat h = 0.5 * (g + g.adjoint());
    const double lmax = Eigen::SelfAdjointEigenSolver<CMat>(h).eigenvalues().maxCoeff();
    const auto sol = solve(trace_bounded(h), tight);
    o.expect(sol.status == SolveStatus::Optimal, "lambda_max status");
    lam_err = std::max(lam_err, std::abs(sol.objective_value - std::max(lmax, 0.0)));
  }
  o.expect(lam_err <= kLambdaMaxTol, "lambda_max");
  double corpus = 0;
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + static_cast<int>(rng() % 15);
    ConicProgram p;
    const CMat g = random_cmat(rng, n, n);
    p.objective = HermitianOperand(0.5 * (g + g.adjoint()));
    p.constraints.push_back({HermitianOperand::identity(n), Sense::LessEqual, 1.0});
    const CMat x0 = CMat::Identity(n, n) / static_cast<double>(n);
    const CMat r = random_cmat(rng, n, 2);
    const CMat a = r * r.adjoint();
    p.constraints.push_back({HermitianOperand(a), Sense::GreaterEqual, 0.5 * trace_product(a, x0)});
    SocConstraint soc;
    for (int d = 0; d < 3; ++d) soc.operators.push_back(random_cmat(rng, n, n));
    soc.bound = 1.5 * soc_norm(soc, x0);
    p.soc = soc;
    const auto sol = solve(p);
    const auto ref = solve(p, tight);
    o.expect(sol.status == SolveStatus::Optimal && ref.status == SolveStatus::Optimal, "corpus status");
    corpus = std::max(corpus, std::abs(sol.objective_value - ref.objective_value) /
                                  std::max({1.0, std::abs(ref.objective_value)}));
  }
  o.expect(corpus <= kCorpusRel, "corpus");
  // Declared infeasible.
  ConicProgram bounds = trace_bounded(CMat::Identity(3, 3));
  bounds.constraints.push_back({HermitianOperand::identity(3), Sense::GreaterEqual, 2.0});
  ConicProgram cone = trace_bounded(CMat::Identity(2, 2));
  cone.constraints.front().rhs = 4.0;
  cone.constraints.push_back({HermitianOperand::identity(2), Sense::GreaterEqual, 1.0});
  cone.soc = SocConstraint{{CMat::Identity(2, 2)}, 0.5};
  ConicProgram zero = trace_bounded(CMat::Identity(2, 2));
  zero.constraints.push_back({HermitianOperand(CMat::Zero(2, 2)), Sense::GreaterEqual, 1.0});
  int infeasible = 0;
  for (const auto* p : {&bounds, &cone, &zero}) infeasible += solve(*p).status == SolveStatus::Infeasible;
  o.expect(infeasible == 3, "infeasible cases");
  o.detail << "lambda_max err " << lam_err << ", corpus max rel " << corpus << ", infeasible " << infeasible << "/3";
}

// 6 ---------------------------------------------------------------------------
void isac_optimization(Outcome& o) {
  const Config c;  // paper-v1: delays {7, 18, 11}, gamma 15 dB, phi in {-5, -40} dB
  const auto e = compute_doppler_cut_isr(c, 1);
  const CVec a = steering_vector(e.channel.num_antennas(), e.theta_rad);
  const std::set<int> allowed{-11, -7, -4, 4, 7, 11};
  for (const auto& r : e.runs) {
    const CMat& f = r.res.bf.vectors;
    const auto th = IsacThresholds::from_db(c.real("gamma_th_db"), r.phi_th_db);
    const double gain = (a.adjoint() * f).squaredNorm();
    const double snr = e.scenario.alpha_sq * e.scenario.cpi_len * gain / e.scenario.noise_power;
    double num = 0;
    for (int d = -40; d <= 40; ++d) {
      if (d == 0) continue;
      cplx acc{0, 0};
      for (int i = 0; i < f.cols(); ++i)
        for (int j = 0; j < f.cols(); ++j)
          if (i != j && r.res.bf.kappas[i] - r.res.bf.kappas[j] == d) acc += a.dot(f.col(i)) * std::conj(a.dot(f.col(j)));
      num += std::norm(acc);
    }
    const double isr = num / (gain * gain);
    double zf = 0;
    for (int l = 0; l < f.cols(); ++l)
      for (int lp = 0; lp < f.cols(); ++lp)
        if (l != lp) zf = std::max(zf, std::abs(e.channel.path(lp).gain.dot(f.col(l))) /
                                           (e.channel.path(lp).gain.norm() * f.col(l).norm()));
    const std::string tag = "phi=" + format_number(r.phi_th_db);
    o.expect(f.squaredNorm() <= e.scenario.tx_power * (1 + kConstraintRel), tag + " power");
    o.expect(snr >= th.gamma_th * (1 - kConstraintRel), tag + " sensing SNR");
    o.expect(isr <= th.phi_th * (1 + kConstraintRel), tag + " ISR");
    o.expect(zf <= 1e-8, tag + " ZF");
    for (int d : r.support) o.expect(allowed.contains(d), tag + " sidelobe at d_tau=" + std::to_string(d));
    o.detail << tag << ": SNR " << lin_to_db(snr) << " dB, ISR " << lin_to_db(isr) << " dB, max sidelobe "
             << r.max_sidelobe_db << " dB; ";
    if (r.phi_th_db == -40.0) o.expect(r.max_sidelobe_db <= kSidelobeMaxDb, "phi=-40 sidelobe");
  }
}

// 7 ---------------------------------------------------------------------------
void tradeoff(Outcome& o) {
  const Config c;  // 50 seeds
  const auto r = compute_tradeoff(c, 1);
  int violations = 0;
  for (const auto& seed : r.samples) {
    // gamma sweep: consecutive points at the same phi with increasing gamma.
    for (std::size_t k = 1; k < r.points.size(); ++k) {
      const auto &p0 = r.points[k - 1], &p1 = r.points[k];
      if (p0.sweep != "gamma" || p1.sweep != "gamma" || p0.phi_th_db != p1.phi_th_db) continue;
      if (seed[k].comm_snr > seed[k - 1].comm_snr * (1 + kMonotoneRel)) ++violations;
    }
  }
  o.expect(violations == 0, "per-seed monotonicity");
  double worst_var = 0;
  for (double g : c.reals("tradeoff_gamma_fixed_db")) {
    double lo = kInf, hi = 0;
    for (std::size_t k = 0; k < r.points.size(); ++k)
      if (r.points[k].sweep == "phi" && r.points[k].gamma_th_db == g) {
        lo = std::min(lo, r.mean_se(k));
        hi = std::max(hi, r.mean_se(k));
      }
    worst_var = std::max(worst_var, (hi - lo) / hi);
  }
  o.expect(worst_var < kPhiVariation, "phi variation");
  double limit = 0;
  for (std::size_t k = 0; k < r.points.size(); ++k)
    if (r.points[k].sweep == "gamma" && r.points[k].gamma_th_db == -kInf)
      for (std::size_t i = 0; i < r.samples.size(); ++i)
        limit = std::max(limit, rel(r.samples[i][k].comm_snr, r.comm_only_snr[i]));
  o.expect(limit <= kCommOnlyRel, "comm-only limit");
  o.detail << r.samples.size() << " seeds; monotonicity violations " << violations << ", max SE variation over phi "
           << 100 * worst_var << "%, comm-only limit rel err " << limit;
}

// 8 ---------------------------------------------------------------------------
void papr_ordering(Outcome& o) {
  Rng rng(8);
  double bound_err = 0;
  for (int l : {5, 10, 20}) {
    CMat f(4, l);
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = unit_phasor(rng);
    std::vector<int> k(static_cast<std::size_t>(l));
    std::iota(k.begin(), k.end(), 0);
    for (double v : papr_bound_dam(BeamformerSet(f, k), 1.0)) bound_err = std::max(bound_err, rel(v, l));
  }
  CMat w(4, 2048);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = unit_phasor(rng);
  for (double v : papr_bound_ofdm(w, 1.0)) bound_err = std::max(bound_err, rel(v, 2048));
  o.expect(bound_err <= kBoundRel, "closed-form bounds");
  const Config c;  // L in {5, 10, 20}, K = 2048, 1e5 samples, QPSK
  o.expect(c.integer("papr_samples") >= 100000, "sample count");
  const auto s = compute_papr(c, 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    o.detail << s[i].name << " " << s[i].q1e3_db << " dB; ";
    if (i > 0) o.expect(s[i - 1].q1e3_db < s[i].q1e3_db, s[i - 1].name + " < " + s[i].name);
  }
  o.detail << "bound rel err " << bound_err;
}

// 9 ---------------------------------------------------------------------------
void ofdm_baseline(Outcome& o) {
  const Config c;
  const double bw = c.real("ofdm_bandwidth_hz");
  const int cp = static_cast<int>(std::lround(c.real("guard_time_s") * bw));
  const OfdmConfig cfg{2048, cp, 4, 1.0 / bw};
  const CMat w = aligned_precoders(cfg, 8, 0.5, 1.0);
  const CMat data = random_ofdm_data(Constellation::make(Modulation::QAM64), cfg.num_symbols, cfg.num_subcarriers, 9);
  int wrong = 0;
  for (int tau = 0; tau <= cp; ++tau) {
    const CMat r = ofdm_echo_subcarriers(cfg, w, data, SensingTarget{0.5, tau, 0.0, {1, 0}}, 0.0, 1);
    wrong += ofdm_estimate(cfg, r, data).tau_hat != tau;
  }
  o.expect(wrong == 0, "delay recovery");
  const auto cr = compute_compare_ofdm(c, 1);  // v in {5, 50} m/s
  const auto& slow = cr.runs.front();
  const auto& fast = cr.runs.back();
  const double ofdm_deg = fast.ofdm_range_psr_db - slow.ofdm_range_psr_db;
  const double dam_change = std::abs(fast.dam_range_psr_db - slow.dam_range_psr_db);
  o.expect(ofdm_deg >= kOfdmDegradeDb, "OFDM degradation");
  o.expect(dam_change < kDamChangeDb, "DAM stability");
  o.detail << "delay errors " << wrong << "/" << cp + 1 << "; nu/df " << fast.doppler_hz / cr.ofdm_cfg.subcarrier_spacing()
           << "; OFDM range PSR " << slow.ofdm_range_psr_db << " -> " << fast.ofdm_range_psr_db << " dB; DAM "
           << slow.dam_range_psr_db << " -> " << fast.dam_range_psr_db << " dB";
}

// 10 --------------------------------------------------------------------------
void snr_budget(Outcome& o) {
  const auto b = compute_snr_budget(Config{}, 1);
  const double formula = rel(b.single_path_library, b.single_path_formula);
  const double mc = std::abs(lin_to_db(b.mc_snr) - lin_to_db(b.single_path_formula));
  const double ratio = rel(b.dam_max / b.ofdm_max, b.ratio_closed_form);
  o.expect(formula <= kSnrFormulaRel, "closed form");
  o.expect(mc <= kMcDb, "Monte Carlo");
  o.expect(ratio <= kRatioRel, "DAM/OFDM ratio");
  o.detail << "gamma " << lin_to_db(b.single_path_formula) << " dB, MC " << lin_to_db(b.mc_snr) << " dB over "
           << b.mc_trials << " trials; ratio " << b.dam_max / b.ofdm_max << " vs N/(L I) = " << b.ratio_closed_form;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, void (*)(Outcome&)>> criteria = {
      {"af-identities", af_identities},       {"delay-cut-psr", delay_cut_psr},
      {"ddcm-convergence", ddcm_convergence}, {"lifted-oracle", lifted_oracle},
      {"solver-sanity", solver_sanity},       {"isac-optimization", isac_optimization},
      {"tradeoff", tradeoff},                 {"papr", papr_ordering},
      {"ofdm-baseline", ofdm_baseline},       {"snr-budget", snr_budget},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %2zu %-18s (%.1f s) %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
