#pragma once

// Small dense solver for
//
//   maximize    Re Tr(C X)
//   subject to  Re Tr(A_i X) <= b_i  or  >= b_i
//               sqrt(sum_d |Tr(G_d X)|^2) <= rho      (optional)
//               X Hermitian positive semidefinite
//
// by ADMM on the real inner-product space of Hermitian matrices. The affine
// step uses a Woodbury factorization of (I + K^T K) cached once per solve; the
// cone step projects onto the PSD cone through the real symmetric embedding.

#include "damisac/common.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

namespace damisac {

inline bool is_hermitian(const CMat& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// Square complex matrix verified conjugate-symmetric on construction.
class HermitianOperand {
 public:
  HermitianOperand() = default;
  explicit HermitianOperand(const CMat& m) {
    if (!is_hermitian(m)) throw InvalidArgument("matrix is not Hermitian");
    m_ = 0.5 * (m + m.adjoint());
  }
  static HermitianOperand identity(int n) { return HermitianOperand(CMat::Identity(n, n)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMat& matrix() const { return m_; }

 private:
  CMat m_;
};

/// [[Re H, -Im H], [Im H, Re H]].
inline RMat real_embed(const CMat& h) {
  if (!is_hermitian(h)) throw InvalidArgument("real_embed expects a Hermitian matrix");
  const auto n = h.rows();
  RMat e(2 * n, 2 * n);
  e.topLeftCorner(n, n) = h.real();
  e.topRightCorner(n, n) = -h.imag();
  e.bottomLeftCorner(n, n) = h.imag();
  e.bottomRightCorner(n, n) = h.real();
  return e;
}

inline RMat real_embed(const HermitianOperand& h) { return real_embed(h.matrix()); }

/// Inverse of real_embed, averaging the redundant blocks.
inline CMat real_unembed(const RMat& e) {
  const auto n = e.rows() / 2;
  const RMat re = 0.5 * (e.topLeftCorner(n, n) + e.bottomRightCorner(n, n));
  const RMat im = 0.5 * (e.bottomLeftCorner(n, n) - e.topRightCorner(n, n));
  CMat h(n, n);
  h.real() = re;
  h.imag() = im;
  return 0.5 * (h + h.adjoint());
}

enum class Sense { LessEqual, GreaterEqual };

struct LinearConstraint {
  HermitianOperand a;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
};

/// sqrt(sum_d |Tr(G_d X)|^2) <= bound.
struct SocConstraint {
  std::vector<CMat> operators;
  double bound = 0.0;
};

struct ConicProgram {
  HermitianOperand objective;
  std::vector<LinearConstraint> constraints;
  std::optional<SocConstraint> soc;

  int dim() const { return objective.dim(); }

  void validate() const {
    const int n = dim();
    require(n >= 1, "program dimension must be positive");
    for (const auto& c : constraints) require(c.a.dim() == n, "constraint dimension mismatch");
    if (soc) {
      require(soc->bound >= 0.0, "SOC bound must be nonnegative");
      for (const auto& g : soc->operators) require(g.rows() == n && g.cols() == n, "SOC operator dimension mismatch");
    }
  }
};

enum class SolveStatus { Optimal, Infeasible, MaxIters };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::MaxIters: return "max_iters";
  }
  return "?";
}

struct SolverSettings {
  double tol = 1e-6;
  int max_iters = 50000;
  double rho = 1.0;
  double relaxation = 1.6;
  bool adaptive_rho = true;
  int check_every = 10;
  bool verbose = false;
};

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct ConicSolution {
  CMat x;
  SolveStatus status = SolveStatus::MaxIters;
  double objective_value = 0.0;
  Residuals residuals;
  int iterations = 0;
};

/// Evaluates Re Tr(A X).
inline double trace_product(const CMat& a, const CMat& x) { return (a.cwiseProduct(x.transpose())).sum().real(); }

namespace detail {

/// Isometry between n x n Hermitian matrices (Frobenius) and R^{n^2}.
struct HermitianVectorizer {
  int n = 0;
  int size() const { return n * n; }

  RVec to_vec(const CMat& h) const {
    RVec v(size());
    int k = 0;
    for (int i = 0; i < n; ++i) v(k++) = h(i, i).real();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        v(k++) = std::sqrt(2.0) * h(i, j).real();
        v(k++) = std::sqrt(2.0) * h(i, j).imag();
      }
    return v;
  }

  CMat from_vec(const RVec& v) const {
    CMat h(n, n);
    int k = 0;
    for (int i = 0; i < n; ++i) h(i, i) = v(k++);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double re = v(k++) / std::sqrt(2.0);
        const double im = v(k++) / std::sqrt(2.0);
        h(i, j) = cplx(re, im);
        h(j, i) = cplx(re, -im);
      }
    return h;
  }
};

inline CMat hermitian_part(const CMat& m) { return 0.5 * (m + m.adjoint()); }

inline CMat project_psd(const CMat& h, double* min_eig = nullptr) {
  Eigen::SelfAdjointEigenSolver<RMat> es(real_embed(hermitian_part(h)));
  const RVec clipped = es.eigenvalues().cwiseMax(0.0);
  if (min_eig) *min_eig = es.eigenvalues().minCoeff();
  const RMat e = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return real_unembed(e);
}

enum class RowKind { Le, Ge, Ball };

}  // namespace detail

inline double min_eigenvalue(const CMat& h) {
  Eigen::SelfAdjointEigenSolver<CMat> es(detail::hermitian_part(h), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Values of the SOC operands, Tr(G_d X).
inline std::vector<cplx> soc_values(const SocConstraint& soc, const CMat& x) {
  std::vector<cplx> out;
  for (const auto& g : soc.operators) out.push_back((g.cwiseProduct(x.transpose())).sum());
  return out;
}

inline double soc_norm(const SocConstraint& soc, const CMat& x) {
  double acc = 0.0;
  for (const auto& v : soc_values(soc, x)) acc += std::norm(v);
  return std::sqrt(acc);
}

class ConicSolver {
 public:
  explicit ConicSolver(SolverSettings settings = {}) : settings_(settings) {}

  ConicSolution solve(const ConicProgram& prog) const {
    prog.validate();
    Setup st = setup(prog);
    if (st.trivially_infeasible) {
      ConicSolution sol;
      sol.x = CMat::Zero(prog.dim(), prog.dim());
      sol.status = SolveStatus::Infeasible;
      return sol;
    }
    return iterate(prog, st);
  }

 private:
  struct Setup {
    detail::HermitianVectorizer vz;
    RVec c;                  // scaled objective
    double c_scale = 1.0;    // original = c_scale * scaled
    RMat k;                  // rows x n^2
    RVec b;                  // per-row rhs (half-lines)
    std::vector<detail::RowKind> kinds;
    int ball_begin = 0;      // first SOC row
    double ball_radius = 0.0;
    RVec row_scale;          // original row norm (ball rows share one)
    Eigen::LLT<RMat> woodbury;
    bool trivially_infeasible = false;
  };

  SolverSettings settings_;

  Setup setup(const ConicProgram& prog) const {
    Setup st;
    st.vz.n = prog.dim();
    const RVec c_raw = st.vz.to_vec(prog.objective.matrix());
    const double c_norm = c_raw.norm();
    st.c_scale = c_norm > 0 ? c_norm : 1.0;
    st.c = c_raw / st.c_scale;

    std::vector<RVec> rows;
    for (const auto& con : prog.constraints) {
      const RVec a = st.vz.to_vec(con.a.matrix());
      const double nrm = a.norm();
      if (nrm < 1e-14) {
        // 0 <= b or 0 >= b decides feasibility outright.
        const bool ok = con.sense == Sense::LessEqual ? 0.0 <= con.rhs : 0.0 >= con.rhs;
        if (!ok) st.trivially_infeasible = true;
        continue;
      }
      rows.push_back(a / nrm);
      st.row_scale.conservativeResize(st.row_scale.size() + 1);
      st.row_scale(st.row_scale.size() - 1) = nrm;
      st.b.conservativeResize(st.b.size() + 1);
      st.b(st.b.size() - 1) = con.rhs / nrm;
      st.kinds.push_back(con.sense == Sense::LessEqual ? detail::RowKind::Le : detail::RowKind::Ge);
    }
    st.ball_begin = static_cast<int>(rows.size());

    if (prog.soc) {
      std::vector<RVec> soc_rows;
      for (const auto& [g, weight] : pair_conjugates(prog.soc->operators)) {
        // Re Tr(G X) = <herm(G^H), X>,  Im Tr(G X) = <herm(j G^H), X>.
        const RVec re = st.vz.to_vec(detail::hermitian_part(g.adjoint())) * weight;
        const RVec im = st.vz.to_vec(detail::hermitian_part(kJ * g.adjoint())) * weight;
        if (re.norm() > 1e-14) soc_rows.push_back(re);
        if (im.norm() > 1e-14) soc_rows.push_back(im);
      }
      if (!soc_rows.empty()) {
        double scale = 0.0;
        for (const auto& r : soc_rows) scale = std::max(scale, r.norm());
        for (const auto& r : soc_rows) {
          rows.push_back(r / scale);
          st.kinds.push_back(detail::RowKind::Ball);
        }
        st.b.conservativeResize(static_cast<Eigen::Index>(rows.size()));
        st.b.tail(static_cast<Eigen::Index>(soc_rows.size())).setZero();
        st.ball_radius = prog.soc->bound / scale;
        st.row_scale.conservativeResize(static_cast<Eigen::Index>(rows.size()));
        st.row_scale.tail(static_cast<Eigen::Index>(soc_rows.size())).setConstant(scale);
      }
    }

    const int p = st.vz.size();
    st.k.resize(static_cast<Eigen::Index>(rows.size()), p);
    for (std::size_t r = 0; r < rows.size(); ++r) st.k.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    const auto m = st.k.rows();
    st.woodbury.compute(RMat::Identity(m, m) + st.k * st.k.transpose());
    return st;
  }

  /// Drops zero operators and merges pairs G_b = G_a^H (equal |Tr(.X)| for Hermitian X) into one with weight sqrt(2).
  static std::vector<std::pair<CMat, double>> pair_conjugates(const std::vector<CMat>& ops) {
    std::vector<std::pair<CMat, double>> out;
    std::vector<bool> used(ops.size(), false);
    for (std::size_t a = 0; a < ops.size(); ++a) {
      if (used[a]) continue;
      const double na = ops[a].cwiseAbs().maxCoeff();
      if (na < 1e-300) {
        used[a] = true;
        continue;
      }
      double weight = 1.0;
      for (std::size_t b = a + 1; b < ops.size(); ++b) {
        if (used[b]) continue;
        if ((ops[b] - ops[a].adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * na) {
          used[b] = true;
          weight = std::sqrt(2.0);
          break;
        }
      }
      used[a] = true;
      out.emplace_back(ops[a], weight);
    }
    return out;
  }

  static RVec project_rows(const Setup& st, const RVec& v) {
    RVec s = v;
    for (int r = 0; r < st.ball_begin; ++r) {
      if (st.kinds[r] == detail::RowKind::Le) s(r) = std::min(v(r), st.b(r));
      else s(r) = std::max(v(r), st.b(r));
    }
    const auto nb = v.size() - st.ball_begin;
    if (nb > 0) {
      const double nrm = v.tail(nb).norm();
      if (nrm > st.ball_radius) s.tail(nb) = v.tail(nb) * (st.ball_radius / nrm);
    }
    return s;
  }

  /// Support function of the row constraint set; +inf when mu points outside its barrier cone.
  static double support(const Setup& st, const RVec& mu) {
    const double slack = 1e-12 * (1.0 + mu.norm());
    double acc = 0.0;
    for (int r = 0; r < st.ball_begin; ++r) {
      if (st.kinds[r] == detail::RowKind::Le) {
        if (mu(r) < -slack) return std::numeric_limits<double>::infinity();
        acc += std::max(mu(r), 0.0) * st.b(r);
      } else {
        if (mu(r) > slack) return std::numeric_limits<double>::infinity();
        acc += std::min(mu(r), 0.0) * st.b(r);
      }
    }
    const auto nb = mu.size() - st.ball_begin;
    if (nb > 0) acc += st.ball_radius * mu.tail(nb).norm();
    return acc;
  }

  /// Largest constraint violation of the PSD iterate, in the caller's units relative to 1 + |rhs|.
  static double violation(const Setup& st, const RVec& kz) {
    double worst = 0.0;
    for (int r = 0; r < st.ball_begin; ++r) {
      const double excess = st.kinds[r] == detail::RowKind::Le ? kz(r) - st.b(r) : st.b(r) - kz(r);
      worst = std::max(worst, std::max(excess, 0.0) * st.row_scale(r) / (1.0 + std::abs(st.b(r)) * st.row_scale(r)));
    }
    const auto nb = kz.size() - st.ball_begin;
    if (nb > 0) {
      const double scale = st.row_scale(st.ball_begin);
      const double excess = std::max(kz.tail(nb).norm() - st.ball_radius, 0.0) * scale;
      worst = std::max(worst, excess / (1.0 + st.ball_radius * scale));
    }
    return worst;
  }

  RVec solve_affine(const Setup& st, const RVec& rhs) const {
    if (st.k.rows() == 0) return rhs;
    return rhs - st.k.transpose() * st.woodbury.solve(st.k * rhs);
  }

  /// Farkas-type check on the dual increment: K^T mu PSD with negative support certifies infeasibility.
  bool certifies_infeasible(const Setup& st, const RVec& dmu) const {
    const double nrm = dmu.norm();
    if (nrm < 1e-12) return false;
    const RVec mu = dmu / nrm;
    const double sigma = support(st, mu);
    if (!(sigma < -1e-3)) return false;
    const CMat kt_mu = st.vz.from_vec(st.k.transpose() * mu);
    return min_eigenvalue(kt_mu) >= -1e-6;
  }

  ConicSolution iterate(const ConicProgram& prog, const Setup& st) const {
    const int p = st.vz.size();
    const auto m = st.k.rows();
    RVec x = RVec::Zero(p), z = RVec::Zero(p), u_psd = RVec::Zero(p);
    RVec s = RVec::Zero(m), u_row = RVec::Zero(m);
    double rho = settings_.rho;
    const double alpha = settings_.relaxation;
    RVec u_row_ref = u_row;
    double damping = 1.0;
    int last_dir = 0;
    ConicSolution sol;
    Residuals res;
    int it = 0;
    for (; it < settings_.max_iters; ++it) {
      const RVec rhs = st.c / rho + (z - u_psd) + st.k.transpose() * (s - u_row);
      x = solve_affine(st, rhs);
      const RVec kx = st.k * x;
      const RVec x_hat = alpha * x + (1.0 - alpha) * z;
      const RVec kx_hat = alpha * kx + (1.0 - alpha) * s;
      const RVec z_prev = z, s_prev = s;
      z = st.vz.to_vec(detail::project_psd(st.vz.from_vec(x_hat + u_psd)));
      u_psd += x_hat - z;
      s = project_rows(st, kx_hat + u_row);
      u_row += kx_hat - s;

      if ((it + 1) % settings_.check_every != 0) continue;

      const double p_scale = 1.0 + std::max({x.norm(), z.norm(), kx.norm(), s.norm()});
      res.primal = std::max(std::sqrt((x - z).squaredNorm() + (kx - s).squaredNorm()) / p_scale,
                            violation(st, st.k * z));
      const RVec dual_vec = rho * ((z - z_prev) + st.k.transpose() * (s - s_prev));
      const double d_scale = 1.0 + std::max({st.c.norm(), rho * u_psd.norm(), rho * (st.k.transpose() * u_row).norm()});
      res.dual = dual_vec.norm() / d_scale;
      const double p_obj = st.c.dot(z);
      const double d_obj = support(st, rho * u_row);
      // Gap in the caller's objective units, so "optimal" bounds the reported value's error directly.
      res.gap = std::isfinite(d_obj) ? st.c_scale * std::abs(d_obj - p_obj) : 1.0;

      if (settings_.verbose && ((it + 1) % (settings_.check_every * 100) == 0))
        std::cerr << "admm it=" << it + 1 << " rho=" << rho << " pri=" << res.primal << " dua=" << res.dual
                  << " gap=" << res.gap << " obj=" << p_obj * st.c_scale << "\n";

      if (res.primal < settings_.tol && res.dual < settings_.tol && res.gap < settings_.tol) {
        sol.status = SolveStatus::Optimal;
        ++it;
        break;
      }
      if ((it + 1) % (settings_.check_every * 20) == 0) {
        if (res.primal > 10 * settings_.tol && certifies_infeasible(st, rho * (u_row - u_row_ref))) {
          sol.status = SolveStatus::Infeasible;
          ++it;
          break;
        }
        u_row_ref = u_row;
      }
      if (settings_.adaptive_rho && (it + 1) % (settings_.check_every * 5) == 0) {
        // Balance the residuals (rho up shrinks the primal one); only react to a clear imbalance. Each reversal
        // of direction halves the step in log(rho): undamped, rho can ping-pong forever and lock ADMM into a
        // limit cycle away from the optimum.
        double factor = 1.0;
        if (res.primal > 0 && res.dual > 0 && (res.primal > 3.0 * res.dual || res.dual > 3.0 * res.primal)) {
          const int dir = res.primal > res.dual ? 1 : -1;
          if (last_dir != 0 && dir != last_dir) damping *= 0.5;
          last_dir = dir;
          if (damping > 1.0 / 64)
            factor = std::exp(damping * std::clamp(0.5 * std::log(res.primal / res.dual), -std::log(10.0), std::log(10.0)));
        }
        if (factor != 1.0) {
          rho *= factor;
          u_psd /= factor;
          u_row /= factor;
          u_row_ref /= factor;
        }
      }
    }
    sol.iterations = it;
    sol.residuals = res;
    sol.x = st.vz.from_vec(z);
    sol.objective_value = trace_product(prog.objective.matrix(), sol.x);
    return sol;
  }
};

/// Convenience wrapper.
inline ConicSolution solve(const ConicProgram& prog, const SolverSettings& settings = {}) {
  return ConicSolver(settings).solve(prog);
}

// Text dump: full-precision dense matrices for bug reports.

namespace detail {
inline void write_matrix(std::ostream& os, const CMat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j).real() << " " << m(i, j).imag();
    os << "\n";
  }
}
inline CMat read_matrix(std::istream& is, int n) {
  CMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double re = 0, im = 0;
      if (!(is >> re >> im)) throw InvalidArgument("truncated matrix in program dump");
      m(i, j) = cplx(re, im);
    }
  return m;
}
inline void expect_token(std::istream& is, const std::string& want) {
  std::string tok;
  if (!(is >> tok) || tok != want) throw InvalidArgument("program dump: expected '" + want + "', got '" + tok + "'");
}
}  // namespace detail

inline void write_program(std::ostream& os, const ConicProgram& prog) {
  const auto old_prec = os.precision(std::numeric_limits<double>::max_digits10);
  const int n = prog.dim();
  os << "conic_program 1\ndim " << n << "\nobjective\n";
  detail::write_matrix(os, prog.objective.matrix());
  os << "constraints " << prog.constraints.size() << "\n";
  for (const auto& c : prog.constraints) {
    os << (c.sense == Sense::LessEqual ? "le " : "ge ") << c.rhs << "\n";
    detail::write_matrix(os, c.a.matrix());
  }
  const std::size_t soc_count = prog.soc ? prog.soc->operators.size() : 0;
  os << "soc " << (prog.soc ? 1 : 0) << " " << soc_count << " " << (prog.soc ? prog.soc->bound : 0.0) << "\n";
  if (prog.soc)
    for (const auto& g : prog.soc->operators) detail::write_matrix(os, g);
  os << "end\n";
  os.precision(old_prec);
}

inline ConicProgram read_program(std::istream& is) {
  detail::expect_token(is, "conic_program");
  int version = 0, n = 0;
  is >> version;
  if (version != 1) throw InvalidArgument("unsupported program dump version");
  detail::expect_token(is, "dim");
  is >> n;
  require(n >= 1, "program dump: invalid dimension");
  ConicProgram prog;
  detail::expect_token(is, "objective");
  prog.objective = HermitianOperand(detail::read_matrix(is, n));
  detail::expect_token(is, "constraints");
  std::size_t count = 0;
  is >> count;
  for (std::size_t i = 0; i < count; ++i) {
    std::string sense;
    double rhs = 0;
    is >> sense >> rhs;
    require(sense == "le" || sense == "ge", "program dump: bad constraint sense");
    prog.constraints.push_back(
        {HermitianOperand(detail::read_matrix(is, n)), sense == "le" ? Sense::LessEqual : Sense::GreaterEqual, rhs});
  }
  detail::expect_token(is, "soc");
  int has_soc = 0;
  std::size_t soc_count = 0;
  double bound = 0;
  is >> has_soc >> soc_count >> bound;
  if (has_soc) {
    SocConstraint soc{{}, bound};
    for (std::size_t i = 0; i < soc_count; ++i) soc.operators.push_back(detail::read_matrix(is, n));
    prog.soc = std::move(soc);
  }
  detail::expect_token(is, "end");
  return prog;
}

}  // namespace damisac
