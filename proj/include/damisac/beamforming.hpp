#pragma once

// DAM-ISAC transmit beamforming: zero-forcing (ZF) projectors that null the
// inter-symbol interference of the delay-aligned paths, the lifted
// semidefinite relaxation (SDR) of the communication-SNR maximization under
// power, sensing-SNR and integrated-sidelobe (ISR) constraints, rank-one
// recovery, and the closed-form baselines.
//
// The lifted variable is B = b b^H with vec(F) = T b. With T = blkdiag(Q_l)
// this is the textbook lifting of dimension M L. Every term of the problem
// sees f_l only through h_l^H f_l, a^H f_l and |f_l|^2, so nothing is lost by
// restricting f_l to span{Q_l h_l, Q_l a}; the compressed mode takes T as an
// orthonormal basis of those spans, which makes the SDR at most 2L x 2L with
// the same optimal value.

#include "damisac/channel.hpp"
#include "damisac/common.hpp"
#include "damisac/conic_solver.hpp"
#include "damisac/parallel.hpp"
#include "damisac/random.hpp"
#include "damisac/sensing.hpp"
#include "damisac/waveform.hpp"

#include <Eigen/SVD>

#include <limits>
#include <sstream>
#include <vector>

namespace damisac {

struct ZfProjectors {
  std::vector<CMat> q;             // Q_l, M x M
  std::vector<double> condition;   // cond(H_l), H_l = the other paths' gains; 1 when L = 1
  bool rank_deficient = false;     // some H_l needed the pseudo-inverse fallback

  int num_paths() const { return static_cast<int>(q.size()); }
};

/// Q_l = I - H_l (H_l^H H_l)^{-1} H_l^H, computed as I - U U^H from the SVD of H_l.
/// Singular values below 1e-10 sigma_max are dropped (pseudo-inverse fallback).
inline ZfProjectors zf_projectors(const MultipathChannel& channel) {
  const int m = channel.num_antennas();
  const int num_paths = channel.num_paths();
  if (m <= num_paths - 1)
    throw InvalidArgument("ZF needs M > L - 1 (M = " + std::to_string(m) + ", L = " + std::to_string(num_paths) +
                          ")");
  const CMat h = channel.gain_matrix();
  ZfProjectors out;
  for (int l = 0; l < num_paths; ++l) {
    if (num_paths == 1) {
      out.q.push_back(CMat::Identity(m, m));
      out.condition.push_back(1.0);
      continue;
    }
    CMat others(m, num_paths - 1);
    for (int j = 0, c = 0; j < num_paths; ++j)
      if (j != l) others.col(c++) = h.col(j);
    Eigen::JacobiSVD<CMat> svd(others, Eigen::ComputeThinU);
    const RVec& s = svd.singularValues();
    const double s_max = s(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > 1e-10 * s_max) ++rank;
    const double cond = s(s.size() - 1) > 0 ? s_max / s(s.size() - 1) : std::numeric_limits<double>::infinity();
    if (rank < others.cols()) out.rank_deficient = true;
    const CMat u = svd.matrixU().leftCols(rank);
    CMat q = CMat::Identity(m, m) - u * u.adjoint();
    out.q.push_back(0.5 * (q + q.adjoint()));
    out.condition.push_back(cond);
  }
  return out;
}

/// Output-SNR and ISR thresholds, linear. gamma_th = 0 drops the sensing (and ISR) constraints;
/// phi_th = +inf drops the ISR constraint.
struct IsacThresholds {
  double gamma_th = 0.0;
  double phi_th = std::numeric_limits<double>::infinity();

  static IsacThresholds from_db(double gamma_db, double phi_db) {
    return {std::isinf(gamma_db) && gamma_db < 0 ? 0.0 : db_to_lin(gamma_db),
            std::isinf(phi_db) && phi_db > 0 ? std::numeric_limits<double>::infinity() : db_to_lin(phi_db)};
  }
};

/// Physical constants of one beamforming instance.
struct BeamformingScenario {
  double tx_power = 1.0;     // P_t
  double noise_power = 1.0;  // sigma^2
  int cpi_len = 1;           // N
  double alpha_sq = 1.0;     // |alpha|^2

  static BeamformingScenario from(const ScenarioConfig& cfg, double alpha_sq) {
    return {cfg.tx_power_w, cfg.noise_power_w, cfg.cpi_len(), alpha_sq};
  }
  /// gamma~ = gamma sigma^2 / (|alpha|^2 N): the bound on a^H F F^H a equivalent to output SNR gamma.
  double beam_gain_for_snr(double gamma) const { return gamma * noise_power / (alpha_sq * cpi_len); }
  double snr_for_beam_gain(double g) const { return g * alpha_sq * cpi_len / noise_power; }
};

enum class LiftingMode { Compressed, Full };

inline LiftingMode parse_lifting_mode(std::string_view s) {
  if (s == "compressed") return LiftingMode::Compressed;
  if (s == "full") return LiftingMode::Full;
  throw InvalidArgument("unknown lifting mode '" + std::string(s) + "' (expected compressed|full)");
}

struct LiftedProblem {
  LiftingMode mode = LiftingMode::Compressed;
  CMat basis;                  // T, ML x n; vec(F) = T b
  std::vector<int> block_dims; // columns of T owned by each path, in order
  CVec vec_h;                  // vec(H), ML
  CVec steering;               // a(theta)
  std::vector<int> kappas;
  ZfProjectors projectors;
  CMat hbar;                   // T^H vec(H) vec(H)^H T
  CMat qbar;                   // T^H T (power)
  CMat abar;                   // T^H (I_L kron A) T
  std::vector<int> isr_delays; // d_tau values with nonempty S(d_tau)
  std::vector<CMat> abar_q;    // T^H (Lambda^T(d, 0) kron A) T, aligned with isr_delays
  double tx_power = 1.0;
  double gamma_tilde = 0.0;    // 0 = sensing constraint inactive
  double phi_tilde = std::numeric_limits<double>::infinity();
  BeamformingScenario scenario;
  IsacThresholds thresholds;

  int dim() const { return static_cast<int>(basis.cols()); }
  int num_paths() const { return static_cast<int>(kappas.size()); }
  int num_antennas() const { return static_cast<int>(steering.size()); }
  bool sensing_active() const { return gamma_tilde > 0.0; }
  bool isr_active() const { return sensing_active() && std::isfinite(phi_tilde) && !abar_q.empty(); }

  /// Largest feasible a^H F F^H a: all power on the path whose ZF subspace best covers a.
  double max_beam_gain() const {
    double best = 0.0;
    for (const auto& q : projectors.q) best = std::max(best, (q * steering).squaredNorm());
    return tx_power * best;
  }

  CMat beamformers(const CVec& b) const {
    const CVec v = basis * b;
    return v.reshaped(num_antennas(), num_paths());
  }
};

namespace detail {

inline CMat orthonormal_span(const CMat& cols, double rel_tol = 1e-12) {
  const double scale = cols.colwise().norm().maxCoeff();
  if (!(scale > 0)) return CMat(cols.rows(), 0);
  Eigen::JacobiSVD<CMat> svd(cols, Eigen::ComputeThinU);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > rel_tol * scale) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace detail

/// Builds the lifted operators and thresholds gamma~ = gamma_th sigma^2/(|alpha|^2 N), phi~ = phi_th gamma~^2.
inline LiftedProblem build_lifted(const MultipathChannel& channel, double theta_rad, const IsacThresholds& th,
                                  const BeamformingScenario& sc, LiftingMode mode = LiftingMode::Compressed) {
  require(th.gamma_th >= 0.0, "gamma_th must be nonnegative");
  require(th.phi_th > 0.0, "phi_th must be positive");
  require(sc.tx_power > 0 && sc.noise_power > 0 && sc.alpha_sq > 0 && sc.cpi_len > 0,
          "scenario powers, gain and CPI length must be positive");
  const int m = channel.num_antennas();
  const int num_paths = channel.num_paths();
  LiftedProblem lp;
  lp.mode = mode;
  lp.scenario = sc;
  lp.thresholds = th;
  lp.tx_power = sc.tx_power;
  lp.kappas = kappas_from_delays(channel.delays());
  lp.projectors = zf_projectors(channel);
  lp.steering = steering_vector(m, theta_rad);
  lp.vec_h = channel.gain_matrix().reshaped();

  std::vector<CMat> blocks;
  for (int l = 0; l < num_paths; ++l) {
    const CMat& q = lp.projectors.q[static_cast<std::size_t>(l)];
    if (mode == LiftingMode::Full) {
      blocks.push_back(q);
    } else {
      CMat span(m, 2);
      span.col(0) = q * channel.path(l).gain;
      span.col(1) = q * lp.steering;
      blocks.push_back(detail::orthonormal_span(span));
    }
  }
  int n = 0;
  for (const auto& b : blocks) n += static_cast<int>(b.cols());
  lp.basis = CMat::Zero(static_cast<Eigen::Index>(m) * num_paths, n);
  for (int l = 0, c = 0; l < num_paths; ++l) {
    const auto w = blocks[static_cast<std::size_t>(l)].cols();
    lp.basis.block(static_cast<Eigen::Index>(l) * m, c, m, w) = blocks[static_cast<std::size_t>(l)];
    lp.block_dims.push_back(static_cast<int>(w));
    c += static_cast<int>(w);
  }
  require(n > 0, "every ZF subspace is orthogonal to both the user channel and the target");

  const CVec th_vec = lp.basis.adjoint() * lp.vec_h;
  lp.hbar = th_vec * th_vec.adjoint();
  lp.qbar = lp.basis.adjoint() * lp.basis;
  lp.qbar = 0.5 * (lp.qbar + lp.qbar.adjoint());

  // y_l = T_l^H a so that T^H (E_ij kron a a^H) T = y_i y_j^H.
  std::vector<CVec> y;
  for (int l = 0; l < num_paths; ++l)
    y.push_back(lp.basis.middleRows(static_cast<Eigen::Index>(l) * m, m).adjoint() * lp.steering);
  lp.abar = CMat::Zero(n, n);
  for (const auto& v : y) lp.abar += v * v.adjoint();

  // Lambda(d, 0)_{ji} = 1 iff kappa_j - kappa_i = d, so Lambda^T(d, 0)_{ij} pairs (j, i) in S(d).
  const auto sets = delay_diff_sets(lp.kappas);
  for (const auto& [d, pairs] : sets.sets) {
    CMat g = CMat::Zero(n, n);
    for (const auto& [j, i] : pairs) g += y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)].adjoint();
    lp.isr_delays.push_back(d);
    lp.abar_q.push_back(std::move(g));
  }

  lp.gamma_tilde = sc.beam_gain_for_snr(th.gamma_th);
  lp.phi_tilde = std::isfinite(th.phi_th) ? th.phi_th * lp.gamma_tilde * lp.gamma_tilde
                                          : std::numeric_limits<double>::infinity();
  return lp;
}

/// Lifted-program constraint values for a candidate b.
struct LiftedValues {
  double objective = 0.0;  // |vec(H)^H T b|^2
  double power = 0.0;      // |T b|^2
  double beam_gain = 0.0;  // a^H F F^H a
  double isr_num = 0.0;    // sum_d |a^H (sum_{S(d)} f_i f_j^H) a|^2
};

inline LiftedValues lifted_values(const LiftedProblem& lp, const CVec& b) {
  LiftedValues v;
  v.objective = std::norm(lp.vec_h.dot(lp.basis * b));
  v.power = (lp.basis * b).squaredNorm();
  v.beam_gain = b.dot(lp.abar * b).real();
  for (const auto& g : lp.abar_q) v.isr_num += std::norm(b.dot(g * b));
  return v;
}

/// The relaxation as a conic program.
inline ConicProgram sdr_program(const LiftedProblem& lp) {
  ConicProgram p;
  p.objective = HermitianOperand(lp.hbar);
  p.constraints.push_back({HermitianOperand(lp.qbar), Sense::LessEqual, lp.tx_power});
  if (lp.sensing_active()) p.constraints.push_back({HermitianOperand(lp.abar), Sense::GreaterEqual, lp.gamma_tilde});
  if (lp.isr_active()) p.soc = SocConstraint{lp.abar_q, std::sqrt(lp.phi_tilde)};
  return p;
}

struct SdrSolution {
  CMat b;  // B-bar*
  ConicSolution raw;
};

/// Default settings: the compressed program is tiny, so it is solved tightly.
inline SolverSettings default_sdr_settings(LiftingMode mode) {
  SolverSettings s;
  if (mode == LiftingMode::Compressed) {
    s.tol = 1e-9;
    s.max_iters = 20000;
  }
  return s;
}

/// Solves the SDR. A sensing threshold above the ZF-limited maximum is rejected before the solver runs;
/// the InfeasibleError carries that maximum as an output SNR (linear).
inline SdrSolution solve_sdr(const LiftedProblem& lp, const SolverSettings& settings) {
  const double g_max = lp.max_beam_gain();
  if (lp.sensing_active() && lp.gamma_tilde > g_max * (1.0 + 1e-9)) {
    const double snr_max = lp.scenario.snr_for_beam_gain(g_max);
    std::ostringstream msg;
    msg << "sensing threshold " << lin_to_db(lp.thresholds.gamma_th) << " dB exceeds the achievable maximum "
        << lin_to_db(snr_max) << " dB under the ZF constraints";
    throw InfeasibleError(msg.str(), snr_max);
  }
  SdrSolution out;
  out.raw = ConicSolver(settings).solve(sdr_program(lp));
  if (out.raw.status == SolveStatus::Infeasible)
    throw InfeasibleError("conic solver certified the relaxation infeasible", lp.scenario.snr_for_beam_gain(g_max));
  out.b = out.raw.x;
  return out;
}

inline SdrSolution solve_sdr(const LiftedProblem& lp) { return solve_sdr(lp, default_sdr_settings(lp.mode)); }

enum class Recovery { LeadingEigvec, Randomized, RankPenalty, Failed };

inline const char* to_string(Recovery r) {
  switch (r) {
    case Recovery::LeadingEigvec: return "leading_eigvec";
    case Recovery::Randomized: return "randomized";
    case Recovery::RankPenalty: return "rank_penalty";
    case Recovery::Failed: return "failed";
  }
  return "?";
}

struct IsacBeamformingResult {
  BeamformerSet bf;
  double comm_snr = 0.0;
  double sensing_snr = 0.0;
  double isr = 0.0;
  double sdr_objective = 0.0;  // relaxation value (upper bound on |sum h^H f|^2)
  double rank_gap = 0.0;       // 1 - lambda_1 / sum(lambda)
  Recovery recovery = Recovery::Failed;
  int candidate = -1;          // winning candidate index, 0 = leading eigenvector
  SolveStatus solver_status = SolveStatus::MaxIters;
  std::string diagnostics;
};

/// gamma_c = |sum_l h_l^H f_l|^2 / sigma^2.
inline double comm_snr(const MultipathChannel& channel, const BeamformerSet& bf, double noise_power) {
  require(bf.num_paths() == channel.num_paths(), "beamformer and channel path counts differ");
  cplx acc{0.0, 0.0};
  for (int l = 0; l < channel.num_paths(); ++l) acc += channel.path(l).gain.dot(bf.vectors.col(l));
  return std::norm(acc) / noise_power;
}

struct RankReduceOptions {
  int num_samples = 200;     // Gaussian randomization draws R
  std::uint64_t seed = 1;
  double feas_tol = 1e-7;    // relative slack accepted on the sensing threshold
};

/// Moves all of b's illumination of the target onto the path l* with the largest |a^H f_l|: every other f_j
/// loses its component along Q_j a, which stays inside its ZF subspace and makes a^H f_j = 0. The ISR numerator
/// then vanishes exactly. Used as a second candidate per draw when the ISR constraint is active.
inline CVec isolate_sensing_path(const LiftedProblem& lp, const CVec& b) {
  CMat f = lp.beamformers(b);
  const Eigen::RowVectorXcd x = lp.steering.adjoint() * f;
  Eigen::Index keep = 0;
  x.cwiseAbs().maxCoeff(&keep);
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    if (j == keep) continue;
    CVec u = lp.projectors.q[static_cast<std::size_t>(j)] * lp.steering;
    const double nu = u.norm();
    if (!(nu > 0)) continue;
    u /= nu;
    f.col(j) -= u * u.dot(f.col(j));
  }
  // T^H vec(F) recovers b for F in the range of T (T has orthonormal columns or is a block projector).
  return lp.basis.adjoint() * f.reshaped();
}

/// For an isolated b (only one path sees the target) whose beam gain at full power is short of gamma~:
/// slides the illuminating beamformer toward its max-gain direction Q a / |Q a| (phase aligned) until the
/// threshold is met at full power. The ISR numerator stays zero. Returns b unchanged if no slide is needed
/// or the threshold is out of reach for that path.
inline CVec steer_to_threshold(const LiftedProblem& lp, const CVec& b) {
  const CMat f = lp.beamformers(b);
  const Eigen::RowVectorXcd x = lp.steering.adjoint() * f;
  Eigen::Index l = 0;
  x.cwiseAbs().maxCoeff(&l);
  CVec u = lp.projectors.q[static_cast<std::size_t>(l)] * lp.steering;
  const double qa2 = u.squaredNorm();
  if (!(qa2 > 0) || !(f.squaredNorm() > 0)) return b;
  u /= std::sqrt(qa2);
  const cplx c = u.dot(f.col(l));
  const cplx phase = std::abs(c) > 0 ? c / std::abs(c) : cplx{1.0, 0.0};
  const CVec target = std::sqrt(f.squaredNorm()) * phase * u;
  auto gain_at_full_power = [&](double rho) {
    CMat g = f;
    g.col(l) = (1.0 - rho) * f.col(l) + rho * target;
    const double pw = g.squaredNorm();
    return std::norm(u.dot(g.col(l))) * qa2 * lp.tx_power / pw;
  };
  if (gain_at_full_power(0.0) >= lp.gamma_tilde || gain_at_full_power(1.0) < lp.gamma_tilde) return b;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gain_at_full_power(mid) >= lp.gamma_tilde ? hi : lo) = mid;
  }
  CMat g = f;
  g.col(l) = (1.0 - hi) * f.col(l) + hi * target;
  return lp.basis.adjoint() * g.reshaped();
}

/// Candidate 0 = sqrt(lambda_1) u_1; candidates 1..R ~ CN(0, B*). Each is scaled up to the power boundary,
/// or less if the ISR bound binds first (that bound scales as t^4, so shrinking always restores it), and
/// kept if the sensing threshold still holds. The best true objective wins; ties go to the lower index.
inline IsacBeamformingResult rank_reduce(const CMat& bstar, const LiftedProblem& lp, const RankReduceOptions& opt = {}) {
  require(bstar.rows() == lp.dim() && bstar.cols() == lp.dim(), "B* dimension does not match the lifted problem");
  require(opt.num_samples >= 0, "num_samples must be nonnegative");
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (bstar + bstar.adjoint()));
  const RVec lam = es.eigenvalues().cwiseMax(0.0);
  const int n = lp.dim();
  require(es.eigenvalues().minCoeff() >= -1e-6 * std::max(1.0, lam.maxCoeff()), "B* is not PSD within tolerance");
  IsacBeamformingResult res;
  res.sdr_objective = trace_product(lp.hbar, bstar);
  res.rank_gap = lam.sum() > 0 ? 1.0 - lam(n - 1) / lam.sum() : 0.0;
  const CMat root = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();

  const std::size_t count = static_cast<std::size_t>(opt.num_samples) + 1;
  std::vector<double> score(count, -1.0);
  std::vector<CVec> cand(count);
  parallel_for(count, [&](std::size_t c) {
    CVec xi;
    if (c == 0) {
      xi = root.col(n - 1);
    } else {
      Rng rng(derive_seed(opt.seed, c));
      CVec g(n);
      for (int i = 0; i < n; ++i) g(i) = complex_normal(rng, 1.0);
      xi = root * g;
    }
    auto consider = [&](const CVec& x) {
      const LiftedValues v = lifted_values(lp, x);
      if (!(v.power > 0)) return;
      double t2 = lp.tx_power / v.power;
      if (lp.isr_active() && v.isr_num > 0) t2 = std::min(t2, std::sqrt(lp.phi_tilde / v.isr_num));
      if (lp.sensing_active() && t2 * v.beam_gain < lp.gamma_tilde * (1.0 - opt.feas_tol)) return;
      if (t2 * v.objective > score[c]) {
        score[c] = t2 * v.objective;
        cand[c] = std::sqrt(t2) * x;
      }
    };
    consider(xi);
    if (lp.sensing_active()) consider(steer_to_threshold(lp, isolate_sensing_path(lp, xi)));
  });

  // A rank-one B* makes every draw a phase-rotated copy of candidate 0; demand a real improvement.
  std::size_t best = count;
  for (std::size_t c = 0; c < count; ++c)
    if (score[c] >= 0 && (best == count || score[c] > score[best] * (1.0 + 1e-9))) best = c;

  if (best == count) {
    res.recovery = Recovery::Failed;
    std::ostringstream d;
    d << "no feasible candidate among " << count << "; B* slacks: power " << lp.tx_power - trace_product(lp.qbar, bstar);
    if (lp.sensing_active()) d << ", sensing " << trace_product(lp.abar, bstar) - lp.gamma_tilde;
    res.diagnostics = d.str();
    res.bf = BeamformerSet(CMat::Zero(lp.num_antennas(), lp.num_paths()), lp.kappas);
    return res;
  }
  res.candidate = static_cast<int>(best);
  res.recovery = best == 0 ? Recovery::LeadingEigvec : Recovery::Randomized;
  res.bf = BeamformerSet(lp.beamformers(cand[best]), lp.kappas);
  return res;
}

/// |sum_l h_l^H f_l|^2 from the lifted data.
inline double lifted_objective(const LiftedProblem& lp, const BeamformerSet& bf) {
  return std::norm(lp.vec_h.dot(bf.vectors.reshaped()));
}

/// Recomputes the reported metrics from the beamformers alone.
inline void fill_metrics(IsacBeamformingResult& res, const MultipathChannel& channel, const LiftedProblem& lp) {
  const auto& sc = lp.scenario;
  res.comm_snr = comm_snr(channel, res.bf, sc.noise_power);
  res.sensing_snr = sensing_snr(res.bf, lp.steering, sc.alpha_sq, sc.cpi_len, sc.noise_power);
  res.isr = beam_gain(res.bf, lp.steering) > 0 ? isr(res.bf, lp.steering) : 0.0;
}

/// Rank-penalty refinement: re-solves the relaxation with objective Tr(H B) - w (Tr B - u^H B u), u the current
/// leading eigenvector. Tr B - u^H B u >= Tr B - lambda_max(B) >= 0 vanishes only at rank one, and every iterate
/// stays feasible for the relaxation. w starts at half the SDR value per unit power and doubles each round.
inline CMat refine_rank_one(const LiftedProblem& lp, const CMat& bstar, const SolverSettings& settings,
                            int max_rounds = 8, double target_gap = 1e-8) {
  const int n = lp.dim();
  CMat b = bstar;
  const double sdr = std::max(trace_product(lp.hbar, bstar), 1e-300);
  double w = 0.5 * sdr / lp.tx_power;
  ConicProgram prog = sdr_program(lp);
  for (int round = 0; round < max_rounds; ++round) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (b + b.adjoint()));
    const RVec lam = es.eigenvalues().cwiseMax(0.0);
    if (lam.sum() <= 0 || 1.0 - lam(n - 1) / lam.sum() < target_gap) break;
    const CVec u = es.eigenvectors().col(n - 1);
    prog.objective = HermitianOperand(lp.hbar - w * (CMat::Identity(n, n) - u * u.adjoint()));
    const ConicSolution sol = ConicSolver(settings).solve(prog);
    if (sol.status != SolveStatus::Optimal) break;
    b = sol.x;
    w *= 2.0;
  }
  return b;
}

struct IsacOptions {
  LiftingMode mode = LiftingMode::Compressed;
  std::optional<SolverSettings> settings;  // defaults per mode
  RankReduceOptions rank;
  /// Run refine_rank_one when B* is not rank one and randomization fails or loses more than this fraction
  /// of the SDR value. Negative disables.
  double refine_loss = 1e-3;
};

/// Full pipeline: lift, solve the SDR, recover F, recompute metrics.
inline IsacBeamformingResult optimize_isac(const MultipathChannel& channel, double theta_rad,
                                           const IsacThresholds& th, const BeamformingScenario& sc,
                                           const IsacOptions& opt = {}) {
  const LiftedProblem lp = build_lifted(channel, theta_rad, th, sc, opt.mode);
  const SdrSolution sdr = solve_sdr(lp, opt.settings.value_or(default_sdr_settings(opt.mode)));
  const SolverSettings settings = opt.settings.value_or(default_sdr_settings(opt.mode));
  IsacBeamformingResult res = rank_reduce(sdr.b, lp, opt.rank);
  res.solver_status = sdr.raw.status;
  if (opt.refine_loss >= 0 && res.rank_gap > 1e-6) {
    const double got = res.recovery == Recovery::Failed ? 0.0 : lifted_objective(lp, res.bf);
    if (got < (1.0 - opt.refine_loss) * res.sdr_objective) {
      RankReduceOptions eig_only = opt.rank;
      eig_only.num_samples = 0;
      const IsacBeamformingResult alt = rank_reduce(refine_rank_one(lp, sdr.b, settings), lp, eig_only);
      if (alt.recovery != Recovery::Failed && lifted_objective(lp, alt.bf) > got) {
        res.bf = alt.bf;
        res.recovery = Recovery::RankPenalty;
        res.candidate = 0;
        res.diagnostics.clear();
      }
    }
  }
  fill_metrics(res, channel, lp);
  return res;
}

/// f_l = c Q_l h_l with c = sqrt(P_t / sum_l |Q_l h_l|^2): best ZF beamformer for the user alone.
inline BeamformerSet comm_only_beamformer(const MultipathChannel& channel, double tx_power) {
  const auto zf = zf_projectors(channel);
  CMat f(channel.num_antennas(), channel.num_paths());
  for (int l = 0; l < channel.num_paths(); ++l) f.col(l) = zf.q[static_cast<std::size_t>(l)] * channel.path(l).gain;
  const double norm2 = f.squaredNorm();
  if (!(norm2 > 0)) throw InvalidArgument("every path is nulled by the ZF projectors");
  f *= std::sqrt(tx_power / norm2);
  return BeamformerSet(f, kappas_from_delays(channel.delays()));
}

/// f_1 = sqrt(P_t / M) a(theta), all other paths silent. kappas default to a single path.
inline BeamformerSet single_path_beamformer(double theta_rad, double tx_power, int num_antennas,
                                            std::vector<int> kappas = {0}) {
  require(!kappas.empty(), "need at least one kappa");
  CMat f = CMat::Zero(num_antennas, static_cast<Eigen::Index>(kappas.size()));
  f.col(0) = std::sqrt(tx_power / num_antennas) * steering_vector(num_antennas, theta_rad);
  return BeamformerSet(f, std::move(kappas));
}

/// C = (N / N_c) log2(1 + gamma_c).
inline double spectral_efficiency(double gamma_c, int cpi_len, int block_len) {
  require(gamma_c >= 0.0, "SNR must be nonnegative");
  require(cpi_len > 0 && block_len >= cpi_len, "need 0 < N <= N_c");
  return static_cast<double>(cpi_len) / block_len * std::log2(1.0 + gamma_c);
}

struct Beampattern {
  std::vector<double> angles_rad;
  std::vector<double> total;                 // a^H F F^H a, normalized to max 1
  std::vector<std::vector<double>> per_path; // |a^H f_l|^2, each normalized to its own max (zeros if silent)
};

inline Beampattern beampattern(const BeamformerSet& bf, const std::vector<double>& angles_rad) {
  require(!angles_rad.empty(), "angle grid must be nonempty");
  Beampattern bp;
  bp.angles_rad = angles_rad;
  bp.per_path.assign(static_cast<std::size_t>(bf.num_paths()), {});
  for (double phi : angles_rad) {
    const Eigen::RowVectorXcd x = steering_vector(bf.num_antennas(), phi).adjoint() * bf.vectors;
    bp.total.push_back(x.squaredNorm());
    for (int l = 0; l < bf.num_paths(); ++l) bp.per_path[static_cast<std::size_t>(l)].push_back(std::norm(x(l)));
  }
  const double peak = *std::ranges::max_element(bp.total);
  if (!(peak > 0)) throw InvalidArgument("beamformer radiates no power");
  for (double& v : bp.total) v /= peak;
  for (auto& path : bp.per_path) {
    const double p = *std::ranges::max_element(path);
    if (p > 0)
      for (double& v : path) v /= p;
  }
  return bp;
}

}  // namespace damisac
